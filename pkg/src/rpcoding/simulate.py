"""Monte Carlo checks of the collision and variance models.

Simulation samples projected pairs straight from the bivariate normal
instead of projecting high-dimensional vectors; the distribution is the
same. Work is cut into keyed blocks, so results are identical for any
number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .coding import CodingScheme, Scheme, code_offset, encode_values
from .csvout import render
from .estimation import build_table
from .projection import PAIRS_PER_BLOCK, block_rng, correlated_pairs, pair_block
from .theory import RHO_SINGULAR, TheoryModel

_KEY_ESTIMATOR = 3


@dataclass(frozen=True)
class SimulationConfig:
    scheme: CodingScheme
    rho: float
    n: int = 10**6
    k: int = 100
    m: int = 10**4
    seed: int = 42
    workers: int = 1
    table_resolution: float = 1e-3
    # Estimator tables reach below zero so rho_hat is not clamped at rho = 0.
    table_rho_min: float = -0.99

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.n < 1 or self.k < 1 or self.m < 1 or self.workers < 1:
            raise ValueError("n, k, m and workers must be positive")


@dataclass(frozen=True)
class SimulationReport:
    scheme: CodingScheme
    rho: float
    trials: int
    empirical_p: float
    std_error: float
    theory_p: float
    theory_v: float | None
    z: float
    replications: int | None = None
    mean_rho_hat: float | None = None
    empirical_kvar: float | None = None


def _z_score(p_hat, p, se):
    if se > 0:
        return (p_hat - p) / se
    return 0.0 if p_hat == p else math.copysign(math.inf, p_hat - p)


def _theory(scheme, rho):
    model = TheoryModel(scheme)
    p = model.prob(rho)
    v = model.variance(rho).v if rho <= RHO_SINGULAR else None
    return p, v


def _code_pair(scheme, x, y, rng, shared_offsets):
    if scheme.kind is Scheme.OFFSET:
        w = scheme.w
        cap = np.nextafter(w, 0.0)
        q = np.minimum(rng.uniform(0.0, w, x.shape), cap)
        q_other = q if shared_offsets else np.minimum(rng.uniform(0.0, w, x.shape), cap)
        return code_offset(x, w, q, scheme.cutoff), code_offset(y, w, q_other, scheme.cutoff)
    return encode_values(x, scheme), encode_values(y, scheme)


def _run_blocks(fn, nblocks, workers):
    if workers == 1 or nblocks == 1:
        return [fn(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(nblocks)))


def simulate_collision(config: SimulationConfig, shared_offsets: bool = True) -> SimulationReport:
    """Empirical collision fraction over ``config.n`` pairs, with a z-score against theory.

    ``shared_offsets=False`` draws independent offsets for the two
    coordinates; it exists only as a negative control.
    """
    scheme, n = config.scheme, config.n
    nblocks = math.ceil(n / PAIRS_PER_BLOCK)

    def count(b):
        size = min(PAIRS_PER_BLOCK, n - b * PAIRS_PER_BLOCK)
        x, y, rng = pair_block(config.rho, config.seed, b)
        cu, cv = _code_pair(scheme, x, y, rng, shared_offsets)
        return int(np.count_nonzero(cu[:size] == cv[:size]))

    matches = sum(_run_blocks(count, nblocks, config.workers))
    p_hat = matches / n
    se = math.sqrt(p_hat * (1.0 - p_hat) / n)
    p, v = _theory(scheme, config.rho)
    return SimulationReport(scheme, config.rho, n, p_hat, se, p, v, _z_score(p_hat, p, se))


def simulate_estimator(config: SimulationConfig) -> SimulationReport:
    """``m`` replications of ``k`` projections each; reports ``k * Var(rho_hat)``."""
    scheme, k, m = config.scheme, config.k, config.m
    if k < 20 or m < 100:
        raise ValueError("estimator simulation needs k >= 20 and m >= 100")
    table = build_table(scheme, config.table_resolution, config.table_rho_min)
    reps_per_block = max(1, PAIRS_PER_BLOCK // k)
    nblocks = math.ceil(m / reps_per_block)

    def matches(b):
        size = min(reps_per_block, m - b * reps_per_block)
        rng = block_rng(config.seed, _KEY_ESTIMATOR, b)
        x, y = correlated_pairs(config.rho, rng, (reps_per_block, k))
        cu, cv = _code_pair(scheme, x, y, rng, True)
        return np.count_nonzero(cu == cv, axis=1)[:size]

    counts = np.concatenate(_run_blocks(matches, nblocks, config.workers))
    p_hats = counts / k
    rho_hat = table.lookup(p_hats)
    p_hat = float(counts.sum()) / (k * m)
    se = math.sqrt(p_hat * (1.0 - p_hat) / (k * m))
    p, v = _theory(scheme, config.rho)
    return SimulationReport(
        scheme,
        config.rho,
        k,
        p_hat,
        se,
        p,
        v,
        _z_score(p_hat, p, se),
        replications=m,
        mean_rho_hat=float(np.mean(rho_hat)),
        empirical_kvar=float(k * np.var(rho_hat, ddof=1)),
    )


def sweep(schemes, rhos, ws, config: SimulationConfig, estimator: bool = False) -> list[SimulationReport]:
    """Cross product of schemes, ``rho`` and ``w`` values.

    The sign scheme has no bin width and gets one cell per ``rho``. Cell
    ``i`` (in row-major order) is simulated with seed ``config.seed + i``.
    """
    if not schemes or not rhos or not ws:
        raise ValueError("sweep lists must be non-empty")
    run = simulate_estimator if estimator else simulate_collision
    cells = []
    for kind in schemes:
        kind = Scheme(kind)
        for w in ([None] if kind is Scheme.SIGN else ws):
            for rho in rhos:
                cells.append((CodingScheme(kind, w, config.scheme.cutoff), float(rho)))
    return [
        run(replace(config, scheme=s, rho=rho, seed=config.seed + i))
        for i, (s, rho) in enumerate(cells)
    ]


REPORT_COLUMNS = (
    "scheme", "w", "rho", "n_or_k", "empirical_p", "theory_p", "z", "empirical_kvar", "theory_v",
)


def reports_csv(reports) -> str:
    rows = (
        (r.scheme.kind.value, r.scheme.w, r.rho, r.trials, r.empirical_p, r.theory_p, r.z,
         r.empirical_kvar, r.theory_v)
        for r in reports
    )
    return render(REPORT_COLUMNS, rows)
