from fractions import Fraction

import numpy as np
import pytest

from ewkv.helmholtz3d import (EPSILON0_NUMERIC, ExponentReport3D,
                              alpha1_3d, alpha2_3d, decay_3d_linear,
                              exponent_gate_3d, helmholtz_split, p_bal_3d,
                              solve_decoupled, verify_decoupling)
from ewkv.spectra import family_roots


class TestSplit:
    def test_parallel_mode_is_pure_potential(self):
        xi = np.array([1.0, 2.0, -1.0])
        parts = helmholtz_split(xi, (3.0 + 1j) * xi)
        assert np.linalg.norm(parts.solenoidal) <= 1e-14

    def test_orthogonal_mode_is_pure_solenoidal(self):
        xi = np.array([1.0, 0.0, 0.0])
        u = np.array([0.0, 1.0, 2.0j])
        parts = helmholtz_split(xi, u)
        assert np.linalg.norm(parts.potential) <= 1e-14

    def test_sum_and_orthogonality_random(self, rng):
        for _ in range(10_000):
            xi = rng.normal(size=3)
            u = rng.normal(size=3) + 1j * rng.normal(size=3)
            parts = helmholtz_split(xi, u)
            assert np.linalg.norm(parts.total - u) <= 1e-14 * max(1, np.linalg.norm(u))
            assert abs(np.vdot(parts.potential, parts.solenoidal)) <= 1e-13

    def test_zero_frequency_rejected(self):
        with pytest.raises(ValueError):
            helmholtz_split(np.zeros(3), np.ones(3))


class TestDecoupledSolve:
    def test_identity_at_t0(self, params12, rng):
        xi = np.array([0.3, -0.7, 1.1])
        u0 = rng.normal(size=3) + 1j * rng.normal(size=3)
        u1 = rng.normal(size=3) + 1j * rng.normal(size=3)
        p0, p1 = helmholtz_split(xi, u0), helmholtz_split(xi, u1)
        got, got_t = solve_decoupled(params12, xi, p0, p1, 0.0)
        np.testing.assert_allclose(got.total, u0)
        np.testing.assert_allclose(got_t.total, u1)

    def test_scalar_roots_match_2d_branches(self, params12):
        # each part is governed by lambda^2 + c^2 r^2 (lambda + 1) = 0
        r = 0.05
        for c in (params12.a, params12.b):
            lp, lm = family_roots(c, r)
            assert lp == pytest.approx(1j * c * r - 0.5 * c * c * r * r, abs=5e-6)
            assert lm == pytest.approx(-1j * c * r - 0.5 * c * c * r * r, abs=5e-6)

    def test_confluent_continuity_at_double_root(self, params12):
        # a r = 2 at r = 2: the confluent path is the limit of its neighbors
        u0 = np.array([0.0, 1.0, 0.5j])
        u1 = np.array([0.0, 0.25, 0.0])
        xi0 = np.array([2.0, 0.0, 0.0])
        ref, _ = solve_decoupled(params12, xi0,
                                 helmholtz_split(xi0, u0),
                                 helmholtz_split(xi0, u1), 3.0)
        diffs = []
        for dr in (1e-4, 1e-6):
            xi = np.array([2.0 + dr, 0.0, 0.0])
            got, _ = solve_decoupled(params12, xi,
                                     helmholtz_split(xi, u0),
                                     helmholtz_split(xi, u1), 3.0)
            diffs.append(np.linalg.norm(got.total - ref.total))
        assert diffs[0] < 1e-3
        assert diffs[1] == pytest.approx(diffs[0] * 1e-2, rel=0.2)

    def test_residual_against_dense_oracle(self, params12, rng):
        worst = 0.0
        for _ in range(200):
            xi = rng.normal(size=3)
            xi *= 10 ** rng.uniform(-2, 1) / np.linalg.norm(xi)
            u0 = rng.normal(size=3) + 1j * rng.normal(size=3)
            u1 = rng.normal(size=3) + 1j * rng.normal(size=3)
            t = 10 ** rng.uniform(-2, 2)
            worst = max(worst, verify_decoupling(params12, xi, u0, u1, t))
        assert worst <= 1e-8

    def test_solenoidal_stays_solenoidal(self, params12, rng):
        xi = np.array([1.0, -0.5, 0.25])
        u = rng.normal(size=3) + 1j * rng.normal(size=3)
        sol = helmholtz_split(xi, u).solenoidal
        zero = type(helmholtz_split(xi, u))(potential=np.zeros(3, complex),
                                            solenoidal=sol)
        got, got_t = solve_decoupled(params12, xi, zero, zero, 7.0)
        assert abs(xi @ got.total) <= 1e-12
        assert abs(xi @ got_t.total) <= 1e-12


class TestDecay3D:
    def test_m1_rates(self, params12):
        times = np.geomspace(50, 500, 12)
        res = decay_3d_linear(params12, None, lambda r: np.exp(-0.5 * r * r),
                              times, m=1.0, s=0.0, window=(50, 500))
        assert res["fit_energy"].slope == pytest.approx(-0.75, abs=0.05)
        assert res["fit_solution"].slope == pytest.approx(-0.25, abs=0.05)

    def test_s1_energy_rate(self, params12):
        times = np.geomspace(50, 500, 12)
        res = decay_3d_linear(params12, None, lambda r: np.exp(-0.5 * r * r),
                              times, m=1.0, s=1.0, window=(50, 500))
        assert res["predicted_energy"] == pytest.approx(-1.25)
        assert res["fit_energy"].slope == pytest.approx(-1.25, abs=0.05)


class TestGate3D:
    def test_p_bal_exact(self):
        assert p_bal_3d(Fraction(1)) == Fraction(5, 2)

    def test_case1_example(self):
        rep = exponent_gate_3d(1.0, 2.6, 2.8, 3.0)
        assert rep.gate == "case-1"
        assert rep.ell1 == 0 and rep.ell2 == 0 and rep.ell3 == 0

    def test_ordering_violation(self):
        with pytest.raises(ValueError, match="ordering"):
            exponent_gate_3d(1.0, 2.8, 2.6, 3.0)

    def test_m_domain(self):
        with pytest.raises(ValueError):
            exponent_gate_3d(1.3, 2.6, 2.8, 3.0)

    def test_case2_loss_value(self):
        # p1 = 2 below balance 5/2: loss (3-m)/(2m)(p_bal - p1) = 1/2
        rep = exponent_gate_3d(Fraction(1), Fraction(2), Fraction(27, 10), Fraction(3))
        assert rep.gate == "case-2"
        assert rep.ell1 == Fraction(1, 2)
        assert rep.ell2 == 0 and rep.ell3 == 0

    def test_case3_compound_loss(self):
        p1, p2, p3 = Fraction(49, 20), Fraction(249, 100), Fraction(59, 20)
        rep = exponent_gate_3d(Fraction(1), p1, p2, p3)
        assert rep.gate == "case-3"
        assert rep.alpha2_3d < Fraction(3, 2)
        pb = Fraction(5, 2)
        assert rep.ell1 == (pb - p1)  # (3-m)/(2m) = 1 at m = 1
        assert rep.ell2 == (pb - p1) * p2 + (pb - p2)
        assert rep.ell3 == 0

    def test_balance_epsilon0(self):
        rep = exponent_gate_3d(Fraction(1), Fraction(5, 2), Fraction(27, 10), Fraction(3))
        assert rep.gate == "case-2"
        assert rep.ell1 == EPSILON0_NUMERIC and rep.ell1_symbol == "epsilon0"

    def test_fail_above_three(self):
        rep = exponent_gate_3d(1.0, 2.6, 2.8, 3.5)
        assert rep.gate == "fail"

    def test_equivalences_random_rationals(self):
        import random

        rnd = random.Random(5)
        for _ in range(1000):
            m = 1 + Fraction(rnd.randint(0, 199), 1000)
            q1 = Fraction(rnd.randint(11, 60), 10)
            q2 = Fraction(rnd.randint(11, 60), 10)
            q3 = Fraction(rnd.randint(11, 60), 10)
            pb = p_bal_3d(m)
            assert (alpha1_3d(m, q1, q2) < Fraction(3, 2)) == \
                (q2 * (q1 + 1 - pb) > pb)
            assert (alpha2_3d(m, q1, q2, q3) < Fraction(3, 2)) == \
                (q3 * (q2 * (q1 + 1 - pb) + 1 - pb) > pb)
