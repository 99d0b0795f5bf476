"""Coding schemes for Gaussian random projections and similarity estimation."""

from .coding import CodingScheme, Scheme, code_space_size, encode_values
from .estimation import CollisionCount, InversionTable, build_table, count_collisions, estimate_rho
from .projection import ProjectionStream, SparseVector, normalize, project, sample_bivariate
from .theory import (
    OptimumW,
    TheoryModel,
    VarianceResult,
    collision_prob,
    dP_drho,
    optimum_w,
    variance_factor,
)

__all__ = [
    "CodingScheme",
    "CollisionCount",
    "InversionTable",
    "OptimumW",
    "ProjectionStream",
    "Scheme",
    "SparseVector",
    "TheoryModel",
    "VarianceResult",
    "build_table",
    "code_space_size",
    "collision_prob",
    "count_collisions",
    "dP_drho",
    "encode_values",
    "estimate_rho",
    "normalize",
    "optimum_w",
    "project",
    "sample_bivariate",
    "variance_factor",
]
