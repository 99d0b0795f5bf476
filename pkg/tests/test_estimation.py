import math

import numpy as np
import pytest

from rpcoding.coding import CodingScheme
from rpcoding.estimation import (
    CollisionCount,
    InversionTable,
    build_table,
    count_collisions,
    estimate_rho,
    read_table_csv,
    rho_grid,
    write_table_csv,
)
from rpcoding.numerics import MonotonicityError
from rpcoding.theory import collision_prob


@pytest.fixture(scope="module")
def sign_table():
    return build_table(CodingScheme.sign())


class TestTable:
    def test_grid(self):
        g = rho_grid(1e-3)
        assert g.size == 1000 and g[0] == 0.0
        assert g[-1] == pytest.approx(0.999, abs=1e-12)
        assert rho_grid(0.1, -0.5)[0] == -0.5

    def test_sign_matches_closed_form(self, sign_table):
        expected = 1 - np.arccos(sign_table.rho) / math.pi
        np.testing.assert_allclose(sign_table.p, expected, rtol=0, atol=1e-15)

    def test_uniform_wide_at_zero(self):
        t = build_table(CodingScheme.uniform(10.0), resolution=0.01)
        assert t.p[0] == pytest.approx(0.5, abs=1e-9)

    def test_two_bit_monotone(self):
        t = build_table(CodingScheme.two_bit(0.75))
        assert np.all(np.diff(t.p) > 0)

    def test_cached(self, sign_table):
        assert build_table(CodingScheme.sign()) is sign_table

    def test_rejects_non_monotone(self):
        with pytest.raises(MonotonicityError):
            InversionTable(CodingScheme.sign(), np.array([0.0, 0.5]), np.array([0.6, 0.55]), 0.5)

    def test_bad_resolution(self):
        with pytest.raises(ValueError):
            build_table(CodingScheme.sign(), resolution=0.0)
        with pytest.raises(ValueError):
            build_table(CodingScheme.sign(), rho_min=-1.0)

    def test_csv_round_trip(self, tmp_path, sign_table):
        path = tmp_path / "table.csv"
        write_table_csv(sign_table, path)
        back = read_table_csv(path, CodingScheme.sign())
        np.testing.assert_array_equal(back.rho, sign_table.rho)
        np.testing.assert_array_equal(back.p, sign_table.p)
        assert back.resolution == pytest.approx(1e-3)
        assert path.read_text().splitlines()[0] == "rho,p"


class TestEstimate:
    def test_sign_two_thirds(self, sign_table):
        assert estimate_rho(sign_table, CollisionCount(2, 3)) == pytest.approx(0.5, abs=1e-3)

    def test_clamps(self, sign_table):
        assert estimate_rho(sign_table, CollisionCount(30, 100)) == 0.0
        assert estimate_rho(sign_table, CollisionCount(100, 100)) == 1.0

    def test_negative_range(self):
        t = build_table(CodingScheme.sign(), resolution=0.01, rho_min=-0.9)
        assert t.rho_min == pytest.approx(-0.9)
        assert estimate_rho(t, CollisionCount(1, 3)) == pytest.approx(-0.5, abs=1e-3)

    def test_monotone_in_matches(self):
        t = build_table(CodingScheme.uniform(1.0), resolution=0.01)
        est = [estimate_rho(t, CollisionCount(j, 200)) for j in range(201)]
        assert all(a <= b for a, b in zip(est, est[1:]))

    @pytest.mark.parametrize("scheme", [CodingScheme.sign(), CodingScheme.offset(2.0), CodingScheme.two_bit(0.75)],
                             ids=lambda s: s.label)
    def test_round_trip(self, scheme):
        res = 0.01
        t = build_table(scheme, resolution=res)
        for rho in np.linspace(0.03, 0.97, 12):
            back = t.lookup(collision_prob(scheme, rho))
            # linear interpolation error is O(res^2) for smooth P
            assert abs(back - rho) <= res

    def test_vectorized_lookup(self, sign_table):
        p = np.array([0.5, 2 / 3, 1.0])
        np.testing.assert_allclose(sign_table.lookup(p), [0.0, 0.5, 1.0], atol=1e-6)


class TestCollisions:
    def test_identical(self):
        c = count_collisions([4, 1, 2, 2], [4, 1, 2, 2])
        assert (c.matches, c.k) == (4, 4)

    def test_partial(self):
        c = count_collisions([1, 2, 3], [1, 0, 3])
        assert (c.matches, c.k) == (2, 3)
        assert c.fraction == pytest.approx(2 / 3)

    def test_disjoint(self):
        assert count_collisions([0, 0], [1, 1]).matches == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            count_collisions([1, 2], [1])

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            CollisionCount(5, 4)
        with pytest.raises(ValueError):
            CollisionCount(0, 0)
