"""Seeded Gaussian projections and direct bivariate-normal sampling.

Randomness is keyed by ``numpy.random.SeedSequence(seed, spawn_key=...)``:
every block of projection rows and every block of simulated pairs has its
own key, so any subset can be regenerated independently and parallel
workers never share a stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ROWS_PER_BLOCK = 1024
PAIRS_PER_BLOCK = 1 << 16

# spawn_key prefixes; each names an independent family of streams
_KEY_ROWS = 0
_KEY_OFFSETS = 1
_KEY_PAIRS = 2


def block_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for one keyed substream of ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class SparseVector:
    """A data vector as parallel arrays of 0-based indices and values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, x) -> "SparseVector":
        x = np.asarray(x, dtype=float)
        idx = np.flatnonzero(x)
        return cls(idx, x[idx])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.indices] = self.values
        return out


_UNIT_SLACK = 8 * np.finfo(float).eps


def normalize(v: SparseVector) -> SparseVector:
    n = v.norm
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    if abs(n - 1.0) <= _UNIT_SLACK:
        # already unit length up to rounding; keeps normalize idempotent
        return v
    return SparseVector(v.indices, v.values / n)


@dataclass(frozen=True)
class ProjectionStream:
    """The ``D x k`` matrix of i.i.d. N(0, 1) entries, generated on demand.

    Rows are produced in blocks of ``ROWS_PER_BLOCK``; only blocks that
    contain a requested feature index are ever drawn, so huge sparse
    dimensions cost nothing until touched.
    """

    seed: int
    dim: int
    k: int

    def __post_init__(self):
        if self.k < 1 or self.dim < 1:
            raise ValueError("need k >= 1 and dim >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def _block(self, b: int) -> np.ndarray:
        n = min(ROWS_PER_BLOCK, self.dim - b * ROWS_PER_BLOCK)
        return block_rng(self.seed, _KEY_ROWS, b).standard_normal((n, self.k))

    def rows(self, indices) -> np.ndarray:
        """Rows of the projection matrix for the given 0-based feature indices."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.dim):
            raise DimensionError(f"feature index outside [0, {self.dim})")
        out = np.empty((idx.size, self.k))
        blocks = idx // ROWS_PER_BLOCK
        for b in np.unique(blocks):
            sel = blocks == b
            out[sel] = self._block(int(b))[idx[sel] - b * ROWS_PER_BLOCK]
        return out

    def matrix(self) -> np.ndarray:
        return self.rows(np.arange(self.dim))

    def offsets(self, w: float) -> np.ndarray:
        """One uniform(0, w) offset per projection, shared by all vectors."""
        q = block_rng(self.seed, _KEY_OFFSETS).uniform(0.0, w, self.k)
        return np.minimum(q, np.nextafter(w, 0.0))


def project(v, stream: ProjectionStream) -> np.ndarray:
    """``x_j = sum_i v_i r_ij`` for a :class:`SparseVector` or a dense array."""
    if not isinstance(v, SparseVector):
        dense = np.asarray(v, dtype=float)
        if dense.ndim != 1 or dense.size > stream.dim:
            raise DimensionError(f"vector of length {dense.size} exceeds D={stream.dim}")
        v = SparseVector.from_dense(dense)
    if v.indices.size == 0:
        return np.zeros(stream.k)
    return v.values @ stream.rows(v.indices)


def correlated_pairs(rho: float, rng: np.random.Generator, size) -> tuple[np.ndarray, np.ndarray]:
    """``y = rho x + sqrt(1 - rho^2) z`` from two independent standard normals."""
    x = rng.standard_normal(size)
    z = rng.standard_normal(size)
    if rho == 1.0:
        return x, x.copy()
    return x, rho * x + math.sqrt((1.0 - rho) * (1.0 + rho)) * z


def _check_rho(rho):
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho!r}")


def pair_block(rho: float, seed: int, b: int, size: int = PAIRS_PER_BLOCK):
    """Pairs for block ``b`` plus the block's generator for any extra draws."""
    _check_rho(rho)
    rng = block_rng(seed, _KEY_PAIRS, b)
    x, y = correlated_pairs(rho, rng, size)
    return x, y, rng


def sample_bivariate(rho: float, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` i.i.d. standard bivariate normal pairs with correlation ``rho``.

    The first ``m`` pairs do not depend on ``n``: pairs come from fixed-size
    keyed blocks, the last one truncated.
    """
    _check_rho(rho)
    if n < 0:
        raise ValueError("n must be non-negative")
    xs, ys = [], []
    for b in range(math.ceil(n / PAIRS_PER_BLOCK)):
        size = min(PAIRS_PER_BLOCK, n - b * PAIRS_PER_BLOCK)
        x, y, _ = pair_block(rho, seed, b, PAIRS_PER_BLOCK)
        xs.append(x[:size])
        ys.append(y[:size])
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ys)
