"""Similarity estimation by inverting tabulated collision probabilities."""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass

import numpy as np

from .coding import CodingScheme
from .numerics import MonotonicityError
from .theory import TheoryModel


@dataclass(frozen=True)
class CollisionCount:
    matches: int
    k: int

    def __post_init__(self):
        if self.k < 1 or not 0 <= self.matches <= self.k:
            raise ValueError(f"invalid collision count {self.matches}/{self.k}")

    @property
    def fraction(self) -> float:
        return self.matches / self.k


@dataclass(frozen=True, eq=False)
class InversionTable:
    """``P(rho)`` on the grid ``rho_min, rho_min + res, ..., 1 - res``.

    Lookups interpolate linearly and treat ``(1, 1)`` as an extra end point,
    since identical vectors always collide.
    """

    scheme: CodingScheme
    rho: np.ndarray
    p: np.ndarray
    resolution: float

    def __post_init__(self):
        if self.rho.shape != self.p.shape or self.rho.size < 2:
            raise ValueError("rho and p must be equal-length arrays with >= 2 entries")
        if np.any(np.diff(self.p) <= 0) or self.p[-1] >= 1.0:
            raise MonotonicityError("tabulated collision probabilities are not strictly increasing")

    @property
    def rho_min(self) -> float:
        return float(self.rho[0])

    def lookup(self, p_hat):
        """Vectorized inverse; values outside the table clamp to ``[rho_min, 1]``."""
        rho = np.interp(p_hat, np.append(self.p, 1.0), np.append(self.rho, 1.0))
        return rho if np.ndim(rho) else float(rho)


def rho_grid(resolution: float, rho_min: float = 0.0) -> np.ndarray:
    n = int(round((1.0 - resolution - rho_min) / resolution)) + 1
    return rho_min + resolution * np.arange(n)


def _build(scheme: CodingScheme, resolution: float, rho_min: float) -> InversionTable:
    if not 0.0 < resolution <= 0.1:
        raise ValueError("resolution must lie in (0, 0.1]")
    if not -1.0 < rho_min < 1.0 - resolution:
        raise ValueError("rho_min must lie in (-1, 1 - resolution)")
    model = TheoryModel(scheme)
    grid = rho_grid(resolution, rho_min)
    p = np.array([model.prob(float(r)) for r in grid])
    bad = np.flatnonzero(np.diff(p) <= 0)
    if bad.size:
        r = grid[bad[0]]
        raise MonotonicityError(f"{scheme.label}: P not increasing near rho={r:.4f}")
    return InversionTable(scheme, grid, p, resolution)


_cache: dict[tuple, InversionTable] = {}
_cache_lock = threading.Lock()


def build_table(scheme: CodingScheme, resolution: float = 1e-3, rho_min: float = 0.0) -> InversionTable:
    """Tabulate ``P(rho)`` for ``scheme``; tables are cached and immutable."""
    key = (scheme, float(resolution), float(rho_min))
    with _cache_lock:
        table = _cache.get(key)
    if table is None:
        table = _build(scheme, resolution, rho_min)
        with _cache_lock:
            table = _cache.setdefault(key, table)
    return table


def estimate_rho(table: InversionTable, count: CollisionCount) -> float:
    return table.lookup(count.fraction)


def count_collisions(codes_u, codes_v) -> CollisionCount:
    u = np.asarray(codes_u)
    v = np.asarray(codes_v)
    if u.shape != v.shape:
        raise ValueError(f"code lists differ in length: {u.shape} vs {v.shape}")
    return CollisionCount(int(np.count_nonzero(u == v)), u.size)


def write_table_csv(table: InversionTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rho", "p"])
        for r, p in zip(table.rho, table.p):
            writer.writerow([repr(float(r)), repr(float(p))])


def read_table_csv(path, scheme: CodingScheme) -> InversionTable:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    rho = np.array([float(r["rho"]) for r in rows])
    p = np.array([float(r["p"]) for r in rows])
    resolution = float(np.round(np.median(np.diff(rho)), 12)) if rho.size > 1 else 0.0
    return InversionTable(scheme, rho, p, resolution)
