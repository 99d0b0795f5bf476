"""Collision probabilities, their derivatives in rho, and variance factors.

For unit-norm vectors every projected pair ``(x_j, y_j)`` is standard
bivariate normal with correlation ``rho``, so all four coders reduce to
integrals of that density. Each scheme gets

* ``P(rho)``       probability that the two codes agree at one projection,
* ``dP/drho``      its analytic derivative,
* ``V(rho)``       the leading constant in ``Var(rho_hat) = V / k + O(1/k^2)``.

``V`` is evaluated from explicit closed forms; ``variance_factor_delta``
recomputes it as ``P (1 - P) / (dP/drho)^2`` so the two routes can be
compared.

The formulas hold for every ``rho`` in ``(-1, 1]``. Negative correlations
are not the focus but are needed so estimator tables can extend below zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, ndtr

from .coding import CodingScheme, Scheme
from .numerics import (
    DEFAULT_QUAD,
    DEFAULT_SERIES,
    INV_SQRT_2PI,
    QuadratureSpec,
    SeriesSpec,
    integrate_batch,
    std_normal_pdf,
    sum_series,
)

# Beyond this the (1 - rho^2) factors blow up; variance factors report the
# rho -> 1 limit instead.
RHO_SINGULAR = 1.0 - 1e-6

# |z| past this contributes nothing representable to a Gaussian integral.
_Z_MAX = 40.0


class SingularityError(ValueError):
    """Requested quantity is singular at rho -> 1."""


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not -1.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (-1, 1], got {rho!r}")
    return rho


def _sigma(rho: float) -> float:
    return math.sqrt((1.0 - rho) * (1.0 + rho))


# --------------------------------------------------------------------------
# Square regions [s, t] x [s, t]
# --------------------------------------------------------------------------


def q_regions(s, t, rho: float, quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """``Pr(x in [s, t], y in [s, t])`` for arrays of intervals, one batch quadrature."""
    rho = _check_rho(rho)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < s):
        raise ValueError("intervals must satisfy s <= t")
    if rho == 1.0:
        return ndtr(t) - ndtr(s)

    sig = _sigma(rho)
    lo = np.clip(s, -_Z_MAX, _Z_MAX)
    hi = np.clip(t, -_Z_MAX, _Z_MAX)

    def integrand(z, owner):
        upper = ndtr((t[owner] - rho * z) / sig)
        lower = ndtr((s[owner] - rho * z) / sig)
        return INV_SQRT_2PI * np.exp(-0.5 * z * z) * (upper - lower)

    return integrate_batch(integrand, lo, hi, quad)


def q_region_prob(s: float, t: float, rho: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    if not s < t:
        raise ValueError("need s < t")
    return float(q_regions([s], [t], rho, quad)[0])


def q_region_prob_drho(s, t, rho: float):
    """Closed-form ``d/drho Pr(x in [s, t], y in [s, t])``.

    Written as ``(a - b)^2 - 2ab expm1(-rho (t - s)^2 / (2 (1 - rho^2)))``
    with ``a = exp(-t^2 / (2 (1 + rho)))`` and ``b`` likewise for ``s``, which
    avoids cancelling three nearly equal exponentials for narrow intervals.
    """
    rho = _check_rho(rho)
    if rho > RHO_SINGULAR:
        raise SingularityError("derivative is singular as rho -> 1")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    one_p = 1.0 + rho
    sig2 = (1.0 - rho) * one_p
    with np.errstate(invalid="ignore"):
        a = np.exp(-0.5 * t * t / one_p)
        b = np.exp(-0.5 * s * s / one_p)
        gap = np.where(np.isfinite(t - s), t - s, np.inf)
        cross = -2.0 * a * b * np.expm1(-rho * gap * gap / (2.0 * sig2))
        cross = np.where(a * b == 0.0, 0.0, cross)
    out = ((a - b) ** 2 + cross) / (2.0 * math.pi * math.sqrt(sig2))
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# Uniform quantization floor(x / w)
# --------------------------------------------------------------------------


def collision_prob_uniform(
    w: float,
    rho: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
    series: SeriesSpec = DEFAULT_SERIES,
) -> float:
    """Twice the sum over bins ``[iw, (i+1)w)``, ``i >= 0``, of the square-region mass."""
    rho = _check_rho(rho)
    if not w > 0:
        raise ValueError("w must be positive")
    if rho == 1.0:
        return 1.0
    return 2.0 * sum_series(lambda i: q_regions(i * w, (i + 1) * w, rho, quad), w, series)


def collision_prob_uniform_rho0(w: float, series: SeriesSpec = DEFAULT_SERIES) -> float:
    """Independent-coordinate special case: ``2 sum (Phi((i+1)w) - Phi(iw))^2``."""
    return 2.0 * sum_series(lambda i: (ndtr((i + 1) * w) - ndtr(i * w)) ** 2, w, series)


def dprob_uniform(w: float, rho: float, series: SeriesSpec = DEFAULT_SERIES) -> float:
    rho = _check_rho(rho)
    if rho > RHO_SINGULAR:
        raise SingularityError("derivative is singular as rho -> 1")
    total = sum_series(lambda i: q_region_prob_drho(i * w, (i + 1) * w, rho), w, series)
    return 2.0 * total


def _uniform_denominator_sum(w: float, rho: float, series: SeriesSpec = DEFAULT_SERIES) -> float:
    """Sum of three exponentials per bin in the closed-form ``V_w`` denominator."""
    one_p = 1.0 + rho
    sig2 = (1.0 - rho) * one_p

    def term(i):
        return (
            np.exp(-((i + 1) ** 2) * w * w / one_p)
            + np.exp(-(i**2) * w * w / one_p)
            - 2.0 * math.exp(-w * w / (2.0 * sig2)) * np.exp(-i * (i + 1) * w * w / one_p)
        )

    return sum_series(term, w, series)


def variance_uniform_rho0(w: float, series: SeriesSpec = DEFAULT_SERIES) -> float:
    """Variance factor of the uniform scheme at rho = 0 from the pure-series form."""
    a = sum_series(lambda i: (ndtr((i + 1) * w) - ndtr(i * w)) ** 2, w, series)
    b = sum_series(
        lambda i: (std_normal_pdf((i + 1) * w) - std_normal_pdf(i * w)) ** 2, w, series
    )
    return a * (0.5 - a) / b**2


# --------------------------------------------------------------------------
# Window with random offset floor((x + q) / w), q ~ U(0, w)
# --------------------------------------------------------------------------


def offset_ratio(w: float, rho: float) -> float:
    """``w / sqrt(d)`` with ``d = 2 (1 - rho)`` the squared distance."""
    return w / math.sqrt(2.0 * (1.0 - rho))


def offset_prob_from_ratio(r):
    """Offset-scheme collision probability as a function of ``r = w / sqrt(d)``.

    ``erf(r/sqrt2)`` stands in for ``2 Phi(r) - 1`` and ``expm1`` for
    ``phi(r) - phi(0)``; both keep accuracy as ``r -> 0``.
    """
    r = np.asarray(r, dtype=float)
    out = erf(r / math.sqrt(2.0)) + 2.0 * INV_SQRT_2PI * np.expm1(-0.5 * r * r) / r
    return out if out.ndim else float(out)


def offset_scaled_variance(r):
    """``V_{w,q} * 4 / d^2``, which depends on ``w`` and ``rho`` only through ``r``."""
    r = np.asarray(r, dtype=float)
    p = offset_prob_from_ratio(r)
    gap = INV_SQRT_2PI * np.expm1(-0.5 * r * r)
    out = (r / gap) ** 2 * p * (1.0 - p)
    return out if out.ndim else float(out)


def collision_prob_offset_closed(w: float, rho: float) -> float:
    rho = _check_rho(rho)
    if not w > 0:
        raise ValueError("w must be positive")
    if rho == 1.0:
        return 1.0
    return float(offset_prob_from_ratio(offset_ratio(w, rho)))


def collision_prob_offset_integral(w: float, rho: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Quadrature of the distance density of ``|x - y|`` against the window overlap ``1 - t/w``."""
    rho = _check_rho(rho)
    if w < 0:
        raise ValueError("w must be non-negative")
    if rho == 1.0:
        return 1.0
    if w == 0:
        return 0.0
    sd = math.sqrt(2.0 * (1.0 - rho))

    def f(t):
        return 2.0 / sd * std_normal_pdf(t / sd) * (1.0 - t / w)

    return float(integrate_batch(lambda t, _o: f(t), [0.0], [w], quad)[0])


def dprob_offset(w: float, rho: float) -> float:
    rho = _check_rho(rho)
    if rho > RHO_SINGULAR:
        raise SingularityError("derivative is singular as rho -> 1")
    d = 2.0 * (1.0 - rho)
    r = w / math.sqrt(d)
    # dP/dd = (phi(r) - phi(0)) / (r d), and d(d)/drho = -2
    return -2.0 * INV_SQRT_2PI * math.expm1(-0.5 * r * r) / (r * d)


# --------------------------------------------------------------------------
# Two-bit non-uniform: (-inf, -w), [-w, 0), [0, w), [w, inf)
# --------------------------------------------------------------------------


def collision_prob_sign(rho: float) -> float:
    rho = _check_rho(rho)
    return 1.0 - math.acos(rho) / math.pi


def dprob_sign(rho: float) -> float:
    rho = _check_rho(rho)
    if rho > RHO_SINGULAR:
        raise SingularityError("derivative is singular as rho -> 1")
    return 1.0 / (math.pi * _sigma(rho))


def collision_prob_two_bit(w: float, rho: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    rho = _check_rho(rho)
    if w < 0:
        raise ValueError("w must be non-negative")
    p1 = collision_prob_sign(rho)
    if rho == 1.0 or w == 0.0:
        return p1
    sig = _sigma(rho)

    def f(z, _owner):
        return INV_SQRT_2PI * np.exp(-0.5 * z * z) * ndtr((rho * z - w) / sig)

    tail = float(integrate_batch(f, [0.0], [min(w, _Z_MAX)], quad)[0])
    return p1 - 4.0 * tail


def _two_bit_bracket(w: float, rho: float) -> float:
    return 1.0 - 2.0 * math.exp(-w * w / (2.0 * (1.0 - rho) * (1.0 + rho))) + 2.0 * math.exp(
        -w * w / (1.0 + rho)
    )


def dprob_two_bit(w: float, rho: float) -> float:
    rho = _check_rho(rho)
    if rho > RHO_SINGULAR:
        raise SingularityError("derivative is singular as rho -> 1")
    return _two_bit_bracket(w, rho) / (math.pi * _sigma(rho))


# --------------------------------------------------------------------------
# Scheme dispatch
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VarianceResult:
    v: float
    p: float
    near_singular: bool = False


@dataclass(frozen=True)
class TheoryModel:
    """Evaluator bundle for one coding scheme."""

    scheme: CodingScheme
    quad: QuadratureSpec = DEFAULT_QUAD
    series: SeriesSpec = DEFAULT_SERIES

    def prob(self, rho: float) -> float:
        kind, w = self.scheme.kind, self.scheme.w
        if kind is Scheme.UNIFORM:
            return collision_prob_uniform(w, rho, self.quad, self.series)
        if kind is Scheme.OFFSET:
            return collision_prob_offset_closed(w, rho)
        if kind is Scheme.TWO_BIT:
            return collision_prob_two_bit(w, rho, self.quad)
        return collision_prob_sign(rho)

    def dprob(self, rho: float) -> float:
        kind, w = self.scheme.kind, self.scheme.w
        if kind is Scheme.UNIFORM:
            return dprob_uniform(w, rho, self.series)
        if kind is Scheme.OFFSET:
            return dprob_offset(w, rho)
        if kind is Scheme.TWO_BIT:
            return dprob_two_bit(w, rho)
        return dprob_sign(rho)

    def variance(self, rho: float) -> VarianceResult:
        """Variance factor from the closed forms, with a guard near rho = 1."""
        rho = _check_rho(rho)
        p = self.prob(rho)
        if rho > RHO_SINGULAR:
            return VarianceResult(0.0, p, near_singular=True)
        kind, w = self.scheme.kind, self.scheme.w
        pq = p * (1.0 - p)
        if kind is Scheme.OFFSET:
            d = 2.0 * (1.0 - rho)
            r = w / math.sqrt(d)
            v = d * d / 4.0 * (r / (std_normal_pdf(r) - INV_SQRT_2PI)) ** 2 * pq
            return VarianceResult(v, p)
        scale = math.pi**2 * (1.0 - rho) * (1.0 + rho) * pq
        if kind is Scheme.UNIFORM:
            v = scale / _uniform_denominator_sum(w, rho, self.series) ** 2
        elif kind is Scheme.TWO_BIT:
            v = scale / _two_bit_bracket(w, rho) ** 2
        else:
            v = scale
        return VarianceResult(v, p)

    def variance_delta(self, rho: float) -> float:
        """``P (1 - P) / (dP/drho)^2``, the generic delta-method route."""
        p = self.prob(rho)
        return p * (1.0 - p) / self.dprob(rho) ** 2


def collision_prob(scheme: CodingScheme, rho: float) -> float:
    return TheoryModel(scheme).prob(rho)


def dP_drho(scheme: CodingScheme, rho: float) -> float:
    return TheoryModel(scheme).dprob(rho)


def variance_factor(scheme: CodingScheme, rho: float) -> VarianceResult:
    return TheoryModel(scheme).variance(rho)


def variance_factor_delta(scheme: CodingScheme, rho: float) -> float:
    return TheoryModel(scheme).variance_delta(rho)


# --------------------------------------------------------------------------
# Optimum bin width
# --------------------------------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimumW:
    w_star: float
    v_star: float
    interval: tuple[float, float]
    at_boundary: bool = False


def golden_section(f, a: float, b: float, xtol: float = 1e-4) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def minimize_on_grid(f, lo: float, hi: float, grid_points: int = 400, xtol: float = 1e-4):
    """Coarse log-spaced grid search refined by golden section.

    Returns ``(x_star, f_star, at_boundary)``; ``at_boundary`` means the grid
    minimum sat on an end point, i.e. the objective is still falling there.
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi for a log-spaced grid")
    grid = np.geomspace(lo, hi, grid_points)
    values = np.array([f(float(x)) for x in grid])
    j = int(np.nanargmin(values))
    at_boundary = j == 0 or j == grid_points - 1
    a = float(grid[max(j - 1, 0)])
    b = float(grid[min(j + 1, grid_points - 1)])
    x, fx = golden_section(f, a, b, xtol)
    if values[j] < fx:
        x, fx = float(grid[j]), float(values[j])
    return x, fx, at_boundary


def optimum_w(
    kind: Scheme | str,
    rho: float,
    interval: tuple[float, float] = (0.0, 20.0),
    grid_points: int = 400,
    xtol: float = 1e-4,
) -> OptimumW:
    """Bin width minimizing the variance factor at a fixed ``rho``.

    A non-positive lower end is replaced by ``hi / 1000`` for the log grid.
    """
    kind = Scheme(kind)
    if kind is Scheme.SIGN:
        raise ValueError("the sign scheme has no bin width")
    rho = _check_rho(rho)
    if rho > RHO_SINGULAR:
        raise SingularityError("variance factors vanish as rho -> 1")
    lo, hi = interval
    if lo <= 0:
        lo = hi * 1e-3

    if kind is Scheme.OFFSET:
        d = 2.0 * (1.0 - rho)

        def objective(w):
            return d * d / 4.0 * offset_scaled_variance(w / math.sqrt(d))

    else:

        def objective(w):
            return TheoryModel(CodingScheme(kind, w)).variance(rho).v

    w_star, v_star, at_boundary = minimize_on_grid(objective, lo, hi, grid_points, xtol)
    return OptimumW(w_star, v_star, (lo, hi), at_boundary)
