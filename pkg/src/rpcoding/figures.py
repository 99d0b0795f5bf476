"""Plot-ready grids of theoretical curves (ids f1 ... f10)."""

from __future__ import annotations

import numpy as np

from .coding import CodingScheme, Scheme
from .csvout import render
from .theory import (
    TheoryModel,
    offset_scaled_variance,
    optimum_w,
    variance_factor,
)

PANEL_RHOS = (0.0, 0.25, 0.5, 0.75, 0.9, 0.99)
W_GRID = tuple(round(0.1 * i, 10) for i in range(1, 101))
OPT_RHOS = tuple(round(0.05 * i, 10) for i in range(20)) + (0.99,)
FIXED_WS = (0.25, 0.5, 0.75, 1.0)


def _p(kind, w, rho):
    return TheoryModel(CodingScheme(kind, w)).prob(rho)


def _v(kind, w, rho):
    return variance_factor(CodingScheme(kind, w), rho).v


def _v_sign(rho):
    return variance_factor(CodingScheme.sign(), rho).v


def _pairs(kind_a, kind_b, quantity, name):
    header = ("rho", "w", f"{name}_{kind_a.value}", f"{name}_{kind_b.value}")
    rows = [
        (rho, w, quantity(kind_a, w, rho), quantity(kind_b, w, rho))
        for rho in PANEL_RHOS
        for w in W_GRID
    ]
    return header, rows


def _optima(kinds, rhos):
    header = ["rho"]
    for kind in kinds:
        header += [f"vmin_{kind.value}", f"wopt_{kind.value}"]
    rows = []
    for rho in rhos:
        row = [rho]
        for kind in kinds:
            opt = optimum_w(kind, rho)
            row += [opt.v_star, opt.w_star]
        rows.append(row)
    return header, rows


def f1():
    return _pairs(Scheme.UNIFORM, Scheme.OFFSET, _p, "p")


def f2():
    r = np.round(np.arange(1, 101) * 0.05, 10)
    return ("w_over_sqrt_d", "v_offset_scaled"), [(x, offset_scaled_variance(x)) for x in r]


def f3():
    return ("w", "v_uniform"), [(w, _v(Scheme.UNIFORM, w, 0.0)) for w in W_GRID]


def f4():
    return _optima((Scheme.UNIFORM, Scheme.OFFSET), OPT_RHOS)


def f5():
    return _pairs(Scheme.UNIFORM, Scheme.OFFSET, _v, "v")


def f6():
    return _pairs(Scheme.UNIFORM, Scheme.TWO_BIT, _p, "p")


def f7():
    return _pairs(Scheme.UNIFORM, Scheme.TWO_BIT, _v, "v")


def f8():
    return _optima((Scheme.TWO_BIT, Scheme.UNIFORM), OPT_RHOS)


def f9():
    """Largest variance ratios ``V_1 / min_w V`` against ``1 - rho`` on a log grid."""
    gaps = np.geomspace(1e-3, 1.0, 31)
    rows = []
    for gap in gaps:
        rho = 1.0 - float(gap)
        v1 = _v_sign(rho)
        rows.append((
            rho,
            gap,
            v1 / optimum_w(Scheme.UNIFORM, rho).v_star,
            v1 / optimum_w(Scheme.TWO_BIT, rho).v_star,
        ))
    return ("rho", "one_minus_rho", "ratio_uniform", "ratio_twobit"), rows


def f10():
    rhos = [round(0.01 * i, 10) for i in range(100)]
    rows = []
    for w in FIXED_WS:
        for rho in rhos:
            v1 = _v_sign(rho)
            rows.append((rho, w, v1 / _v(Scheme.UNIFORM, w, rho), v1 / _v(Scheme.TWO_BIT, w, rho)))
    return ("rho", "w", "ratio_uniform", "ratio_twobit"), rows


FIGURES = {f.__name__: f for f in (f1, f2, f3, f4, f5, f6, f7, f8, f9, f10)}


def figure_data(figure_id: str) -> str:
    try:
        make = FIGURES[figure_id]
    except KeyError:
        raise ValueError(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}") from None
    header, rows = make()
    return render(header, rows)

