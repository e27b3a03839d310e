import numpy as np
import pytest
from numpy.testing import assert_allclose

from ewkv.core import (assemble_matrices, dc_evolve, freq_from_r,
                       freq_from_xi, from_first_order, make_params,
                       to_first_order)


class TestMakeParams:
    def test_valid(self):
        p = make_params(1, 2)
        assert p.a == 1.0 and p.b == 2.0

    @pytest.mark.parametrize("a,b", [(2, 1), (1, 1)])
    def test_ordering_rejected(self, a, b):
        with pytest.raises(ValueError, match="b > a violated"):
            make_params(a, b)

    def test_positivity_rejected(self):
        with pytest.raises(ValueError, match="a > 0"):
            make_params(-1.0, 2.0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            make_params(1.0, float("inf"))


class TestMatrices:
    def test_a_eta_axis_direction(self, params12):
        m = assemble_matrices(params12, freq_from_r(1.0, (1.0, 0.0)))
        assert_allclose(m.A_eta, [[4.0, 0.0], [0.0, 1.0]])

    def test_phi_entry(self, params12):
        m = assemble_matrices(params12, freq_from_r(1.0))
        assert m.Phi[0, 0] == pytest.approx(-2.0 + 2.0j)
        assert_allclose(m.Phi, -0.5 * m.B0 + 1j * m.B1)

    def test_a_eta_eigenvalues_any_direction(self, params12, rng):
        for _ in range(50):
            v = rng.normal(size=2)
            m = assemble_matrices(params12, freq_from_r(1.0, v / np.hypot(*v)))
            assert_allclose(sorted(np.linalg.eigvalsh(m.A_eta)), [1.0, 4.0],
                            atol=1e-12)

    def test_m_eta_involution(self, params12, rng):
        worst = 0.0
        for _ in range(10_000):
            v = rng.normal(size=2)
            m = assemble_matrices(params12, freq_from_r(1.0, v / np.hypot(*v)))
            worst = max(worst, np.abs(m.M_eta @ m.M_eta - np.eye(2)).max())
        assert worst <= 1e-14

    def test_phi_depends_on_r_only(self, params12, rng):
        ref = assemble_matrices(params12, freq_from_r(0.7, (1.0, 0.0))).Phi
        for _ in range(20):
            v = rng.normal(size=2)
            other = assemble_matrices(params12, freq_from_r(0.7, v / np.hypot(*v))).Phi
            assert np.array_equal(ref, other)

    def test_m_diagonalizes_a(self, params12, rng):
        v = rng.normal(size=2)
        m = assemble_matrices(params12, freq_from_r(2.0, v / np.hypot(*v)))
        diag = m.M_eta @ m.A_eta @ m.M_eta
        assert_allclose(diag, np.diag([4.0, 1.0]), atol=1e-14)


class TestFirstOrderTransform:
    def test_zero_data(self, params12):
        fq = freq_from_r(1.0)
        w = to_first_order(params12, fq, np.zeros(2), np.zeros(2))
        assert_allclose(w, np.zeros(4))

    def test_axis_example(self, params12):
        fq = freq_from_r(1.0, (1.0, 0.0))
        w = to_first_order(params12, fq, np.array([1.0, 0.0]), np.zeros(2))
        assert_allclose(w, [2j, 0, -2j, 0])
        u, ut = from_first_order(params12, fq, w)
        assert_allclose(u, [1.0, 0.0], atol=1e-14)
        assert_allclose(ut, [0.0, 0.0], atol=1e-14)

    @pytest.mark.parametrize("r", [0.1, 1.0, 10.0])
    def test_roundtrip(self, params12, rng, r):
        for _ in range(100):
            v = rng.normal(size=2)
            fq = freq_from_r(r, v / np.hypot(*v))
            u = rng.normal(size=2) + 1j * rng.normal(size=2)
            ut = rng.normal(size=2) + 1j * rng.normal(size=2)
            w = to_first_order(params12, fq, u, ut)
            u2, ut2 = from_first_order(params12, fq, w)
            assert_allclose(u2, u, atol=1e-12)
            assert_allclose(ut2, ut, atol=1e-12)
            w2 = to_first_order(params12, fq, u2, ut2)
            assert_allclose(w2, w, atol=1e-12)

    def test_amplification_at_small_r(self, params12, rng):
        # |u_hat| scales like |W| / r, the low-frequency singularity of the map
        r = 1e-3
        fq = freq_from_r(r)
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
        u, ut = from_first_order(params12, fq, w)
        ratio = np.linalg.norm(u) * r / np.linalg.norm(w)
        assert 0.05 < ratio < 2.0

    def test_zero_frequency_rejected(self, params12):
        fq = freq_from_xi([0.0, 0.0])
        with pytest.raises(ValueError, match="dc_evolve"):
            to_first_order(params12, fq, np.zeros(2), np.zeros(2))
        with pytest.raises(ValueError):
            from_first_order(params12, fq, np.zeros(4))


class TestDcEvolve:
    def test_stationary(self):
        u0 = np.array([1.0 + 1j, 2.0])
        u, ut = dc_evolve(u0, np.zeros(2), 7.0)
        assert_allclose(u, u0)
        assert_allclose(ut, np.zeros(2))

    def test_linear_growth(self):
        u, ut = dc_evolve(np.zeros(2), np.array([1.0, 0.0]), 3.0)
        assert_allclose(u, [3.0, 0.0])
        assert_allclose(ut, [1.0, 0.0])

    def test_small_r_limit_matches(self, params12):
        # the exact evolution approaches the zero-frequency polynomial law
        from ewkv.propagator import propagate

        r, t = 1e-6, 5.0
        fq = freq_from_r(r)
        u0 = np.array([0.3 + 0.1j, -0.2])
        u1 = np.array([0.05, 0.4j])
        w0 = to_first_order(params12, fq, u0, u1)
        u_t, ut_t = from_first_order(params12, fq, propagate(params12, r, t, w0))
        u_dc, ut_dc = dc_evolve(u0, u1, t)
        assert_allclose(u_t, u_dc, rtol=0, atol=1e-6 * np.linalg.norm(u_dc))
        assert_allclose(ut_t, ut_dc, rtol=0, atol=1e-6)
