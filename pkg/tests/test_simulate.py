import math
from dataclasses import replace

import numpy as np
import pytest

from rpcoding.coding import CodingScheme, Scheme
from rpcoding.simulate import (
    REPORT_COLUMNS,
    SimulationConfig,
    reports_csv,
    simulate_collision,
    simulate_estimator,
    sweep,
)
from rpcoding.theory import collision_prob, dP_drho

import oracles


def four_sigma_ok(report):
    return abs(report.z) <= 4


def second_order_bias(scheme, rho, k, h=1e-4):
    """``E[g(P_hat)] - g(P) ~ g''(P) Var(P_hat) / 2`` with ``g`` the inverse of ``P``."""
    p = collision_prob(scheme, rho)
    d1 = dP_drho(scheme, rho)
    d2 = (dP_drho(scheme, rho + h) - dP_drho(scheme, rho - h)) / (2 * h)
    return -0.5 * d2 / d1**3 * p * (1 - p) / k


class TestCollision:
    def test_sign_half(self):
        r = simulate_collision(SimulationConfig(CodingScheme.sign(), 0.0))
        assert abs(r.empirical_p - 0.5) <= 4 * 0.0005
        assert r.trials == 10**6

    def test_uniform_w1(self):
        r = simulate_collision(SimulationConfig(CodingScheme.uniform(1.0), 0.0, seed=3))
        assert r.theory_p == pytest.approx(oracles.UNIFORM_P_W1_RHO0, abs=1e-12)
        assert four_sigma_ok(r)

    def test_offset_w2(self):
        r = simulate_collision(SimulationConfig(CodingScheme.offset(2.0), 0.0, seed=4))
        assert r.theory_p == pytest.approx(oracles.OFFSET_P_W2_RHO0, abs=1e-12)
        assert four_sigma_ok(r)

    def test_worker_count_does_not_matter(self):
        cfg = SimulationConfig(CodingScheme.offset(1.0), 0.6, n=300_000, seed=9)
        a = simulate_collision(cfg)
        assert simulate_collision(cfg) == a
        assert simulate_collision(replace(cfg, workers=4)) == a

    def test_independent_offsets_are_wrong(self):
        cfg = SimulationConfig(CodingScheme.offset(2.0), 0.75, seed=11)
        good = simulate_collision(cfg)
        bad = simulate_collision(cfg, shared_offsets=False)
        assert four_sigma_ok(good)
        assert abs(bad.z) > 10

    def test_partial_block(self):
        r = simulate_collision(SimulationConfig(CodingScheme.sign(), 0.3, n=1000, seed=1))
        assert r.trials == 1000
        assert r.empirical_p * 1000 == pytest.approx(round(r.empirical_p * 1000))

    def test_rho_one(self):
        r = simulate_collision(SimulationConfig(CodingScheme.uniform(0.5), 1.0, n=5000))
        assert r.empirical_p == 1.0 and r.z == 0.0 and r.theory_v is None

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SimulationConfig(CodingScheme.sign(), -0.2)
        with pytest.raises(ValueError):
            SimulationConfig(CodingScheme.sign(), 0.2, workers=0)


class TestEstimator:
    @pytest.mark.parametrize(
        "scheme, rho",
        [
            (CodingScheme.sign(), 0.0),
            (CodingScheme.uniform(2.33), 0.0),
            (CodingScheme.offset(2.33), 0.0),
            (CodingScheme.two_bit(0.75), 0.5),
        ],
        ids=["sign", "uniform", "offset", "twobit"],
    )
    def test_variance_and_bias(self, scheme, rho):
        k, m = 100, 10**4
        r = simulate_estimator(SimulationConfig(scheme, rho, k=k, m=m, seed=5))
        assert r.empirical_kvar == pytest.approx(r.theory_v, rel=0.15)
        se = math.sqrt(r.empirical_kvar / k / m)
        bias = r.mean_rho_hat - rho
        assert abs(bias - second_order_bias(scheme, rho, k)) <= 3 * se
        if abs(second_order_bias(scheme, rho, k)) < se:
            assert abs(bias) <= 3 * se

    def test_deterministic_across_workers(self):
        cfg = SimulationConfig(CodingScheme.sign(), 0.4, k=50, m=2000, seed=8)
        assert simulate_estimator(cfg) == simulate_estimator(replace(cfg, workers=3))

    def test_requires_sizes(self):
        with pytest.raises(ValueError):
            simulate_estimator(SimulationConfig(CodingScheme.sign(), 0.0, k=10))
        with pytest.raises(ValueError):
            simulate_estimator(SimulationConfig(CodingScheme.sign(), 0.0, m=50))


class TestSweep:
    def test_single_cell(self):
        cfg = SimulationConfig(CodingScheme.uniform(1.0), 0.0, n=100_000, seed=21)
        (cell,) = sweep([Scheme.UNIFORM], [0.25], [0.5], cfg)
        assert cell == simulate_collision(replace(cfg, scheme=CodingScheme.uniform(0.5), rho=0.25))

    def test_sign_once_per_rho(self):
        cfg = SimulationConfig(CodingScheme.sign(), 0.0, n=1000)
        cells = sweep(["sign", "offset"], [0.0, 0.5], [1.0, 2.0], cfg)
        assert [c.scheme.label for c in cells].count("sign") == 2
        assert len(cells) == 6

    def test_theory_monotone_in_rho(self):
        cfg = SimulationConfig(CodingScheme.sign(), 0.0, n=1000)
        rhos = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99]
        cells = sweep(["uniform", "offset"], rhos, [0.5, 2.0, 8.0], cfg)
        for i in range(0, len(cells), len(rhos)):
            p = [c.theory_p for c in cells[i:i + len(rhos)]]
            assert all(a < b for a, b in zip(p, p[1:]))
            assert cells[i].theory_p == collision_prob(cells[i].scheme, 0.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            sweep([], [0.0], [1.0], SimulationConfig(CodingScheme.sign(), 0.0))

    def test_csv(self):
        cfg = SimulationConfig(CodingScheme.sign(), 0.0, n=1000)
        text = reports_csv(sweep(["sign"], [0.5], [1.0], cfg))
        lines = text.splitlines()
        assert lines[0] == ",".join(REPORT_COLUMNS)
        fields = lines[1].split(",")
        assert fields[0] == "sign" and fields[1] == "" and fields[3] == "1000"
        assert np.isfinite(float(fields[4]))
