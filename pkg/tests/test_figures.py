import csv
import io

import numpy as np
import pytest

from rpcoding.figures import FIGURES, PANEL_RHOS, W_GRID, figure_data


def table(figure_id):
    return list(csv.DictReader(io.StringIO(figure_data(figure_id))))


def test_unknown():
    with pytest.raises(ValueError, match="unknown figure"):
        figure_data("f0")


def test_registry():
    assert list(FIGURES) == [f"f{i}" for i in range(1, 11)]


def test_f1_panels_and_monotone():
    rows = table("f1")
    assert len(rows) == len(PANEL_RHOS) * len(W_GRID)
    p = np.array([float(r["p_uniform"]) for r in rows]).reshape(len(PANEL_RHOS), -1)
    assert np.all(np.diff(p, axis=0) > 0)
    q = np.array([float(r["p_offset"]) for r in rows]).reshape(len(PANEL_RHOS), -1)
    assert np.all(np.diff(q, axis=1) > 0)


def test_f2_minimum():
    rows = table("f2")
    v = np.array([float(r["v_offset_scaled"]) for r in rows])
    assert v.min() == pytest.approx(7.6797, abs=2e-3)


def test_f3_approaches_limit():
    rows = table("f3")
    assert float(rows[-1]["v_uniform"]) == pytest.approx(np.pi**2 / 4, abs=1e-9)


def test_f7_two_bit_lower_at_small_w():
    rows = [r for r in table("f7") if float(r["rho"]) == 0.25 and float(r["w"]) <= 1.0]
    assert any(float(r["v_twobit"]) < float(r["v_uniform"]) for r in rows)


def test_f10_ratios():
    rows = table("f10")
    assert len(rows) == 400
    assert all(float(r["ratio_twobit"]) > 0 for r in rows)


@pytest.mark.slow
def test_f9_ratios_at_least_one():
    rows = table("f9")
    assert all(float(r["ratio_uniform"]) >= 1 - 1e-9 for r in rows)
