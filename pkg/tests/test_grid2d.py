import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from ewkv.core import assemble_matrices, freq_from_xi, to_first_order
from ewkv.grid2d import (fit_decay, hs_norm_lattice, hs_norm_radial,
                         lattice_field_from_data, lattice_frequencies,
                         make_data, norm_suite, radial_grid,
                         solve_linear_lattice, solve_linear_radial,
                         w_profile, w_profile_from_data)


class TestMakeData:
    def test_gaussian_mass(self):
        g = make_data("gaussian", 1.0)
        assert g.value_at_zero == 1.0
        assert g.fourier(0.0, 0.0) == 1.0 + 0j

    def test_d_gaussian_zero_mean(self):
        dg = make_data("d_gaussian", 1.0)
        assert dg.value_at_zero == 0j
        # vanishes linearly: transform ~ i xi_1
        assert abs(dg.fourier(1e-6, 0.0)) == pytest.approx(1e-6, rel=1e-5)

    def test_ring_band_mass(self):
        ring = make_data("ring", 1.0)
        nodes, weights = radial_grid(1e-4, 50.0, 2048)
        dens = np.abs(ring.fourier_radial(nodes)) ** 2
        total = np.sum(weights * dens)
        band = np.sum(weights * dens * ((nodes >= 0.5) & (nodes <= 2.0)))
        assert band / total >= 0.99

    def test_bad_kind_and_scale(self):
        with pytest.raises(ValueError):
            make_data("square", 1.0)
        with pytest.raises(ValueError):
            make_data("gaussian", 0.0)


class TestNorms:
    def test_zero_field(self, params12):
        prof = w_profile(lambda r: np.zeros_like(r))
        assert hs_norm_radial(prof, 0.0) == 0.0
        assert hs_norm_radial(prof, 1.0) == 0.0

    def test_lattice_gaussian_l2_matches_analytic(self):
        g = make_data("gaussian", 1.0)
        fld = lattice_field_from_data(512, 40.0, g, None)
        l2 = hs_norm_lattice(fld.u_hat[0], 512, 40.0, 0.0)
        assert l2 == pytest.approx(1.0 / (2 * math.sqrt(math.pi)), rel=1e-6)

    def test_spectral_convergence_in_n(self):
        g = make_data("gaussian", 1.0)
        vals = {}
        for n in (512, 1024):
            fld = lattice_field_from_data(n, 40.0, g, None)
            vals[n] = hs_norm_lattice(fld.u_hat[0], n, 40.0, 1.0)
        assert abs(vals[1024] - vals[512]) <= 1e-8 * vals[512]

    def test_single_mode_multiplier(self):
        # one conjugate mode pair at |xi| = 2 on a box with L = 10 pi
        n, L = 64, 10 * math.pi
        fld = lattice_field_from_data(n, L, None, None)
        fld.u_hat[0, 20, 0] = 1.0
        fld.u_hat[0, (-20) % n, 0] = 1.0
        h1 = hs_norm_lattice(fld.u_hat, n, L, 1.0)
        h0 = hs_norm_lattice(fld.u_hat, n, L, 0.0)
        assert h1 == pytest.approx(2.0 * h0, rel=1e-12)

    def test_norm_suite_dispatch(self, params12):
        prof = w_profile(lambda r: np.exp(-r * r))
        assert norm_suite(prof, 0.0, 2) > 0
        with pytest.raises(ValueError, match="unsupported"):
            norm_suite(prof, 0.0, math.inf)
        g = make_data("gaussian", 1.0)
        fld = lattice_field_from_data(64, 20.0, g, None)
        assert norm_suite(fld, 0.0, math.inf) > 0

    def test_radial_vs_lattice_consistency(self, params12):
        # the same radially symmetric u-level data, W-norm on both grids
        from ewkv.grid2d import _lattice_to_w

        g = make_data("gaussian", 1.0)
        prof = w_profile_from_data(params12, g, g)
        rad = hs_norm_radial(prof, 0.0)
        fld = lattice_field_from_data(512, 40.0, g, g)
        w, _ = _lattice_to_w(params12, fld)
        lat = hs_norm_lattice(w, 512, 40.0, 0.0)
        assert lat == pytest.approx(rad, rel=0.01)


class TestLinearSolvers:
    def test_radial_t0_row(self, params12):
        prof = w_profile(lambda r: np.exp(-0.5 * r * r))
        table, _ = solve_linear_radial(params12, prof, [0.0, 1.0], s_values=(0.0,))
        assert table["W_Hs0_L2"][0] == pytest.approx(hs_norm_radial(prof, 0.0))

    def test_radial_decay_slopes(self, params12):
        prof = w_profile(lambda r: np.exp(-0.5 * r * r), direction=(1, 0, 0, 0))
        times = np.geomspace(50, 500, 12)
        table, _ = solve_linear_radial(params12, prof, times, s_values=(0.0, 1.0))
        f0 = fit_decay(times, table["W_Hs0_L2"], (50, 500))
        f1 = fit_decay(times, table["W_Hs1_L2"], (50, 500))
        assert f0.slope == pytest.approx(-0.5, abs=0.05)
        assert f1.slope == pytest.approx(-1.0, abs=0.05)

    def test_single_mode_against_dense_oracle(self, params12):
        n, L = 64, 10 * math.pi
        fld = lattice_field_from_data(n, L, None, None)
        amp = 1.0 + 0.5j
        k = (3, 5)
        fld.u_hat[0][k] = amp
        fld.u_hat[0][(-k[0]) % n, (-k[1]) % n] = np.conj(amp)
        t = 2.5
        _, kept = solve_linear_lattice(params12, fld, [0.0, t],
                                       s_values=(0.0,), want_sup=False,
                                       keep_fields=True)
        freqs = lattice_frequencies(n, L)
        fq = freq_from_xi([freqs[k[0]], freqs[k[1]]])
        w0 = to_first_order(params12, fq, np.array([amp, 0]), np.zeros(2))
        Phi = assemble_matrices(params12, fq).Phi
        wt = expm(t * Phi) @ w0
        from ewkv.core import from_first_order

        uh, uth = from_first_order(params12, fq, wt)
        got = kept[1]
        assert abs(got.u_hat[0][k] - uh[0]) < 1e-10
        assert abs(got.u_hat[1][k] - uh[1]) < 1e-10
        assert abs(got.ut_hat[0][k] - uth[0]) < 1e-10

    def test_dc_mode_polynomial(self, params12):
        g = make_data("gaussian", 1.0)
        fld = lattice_field_from_data(64, 20.0, g, g)
        _, kept = solve_linear_lattice(params12, fld, [0.0, 3.0],
                                       s_values=(0.0,), want_sup=False,
                                       keep_fields=True)
        got = kept[1]
        assert got.u_hat[0, 0, 0] == pytest.approx(1.0 + 3.0 * 1.0)
        assert got.ut_hat[0, 0, 0] == pytest.approx(1.0)

    def test_norm_monotone_envelope(self, params12):
        # per-frequency |W| never grows: L2 of W-level data is non-increasing
        g = make_data("gaussian", 1.0)
        prof = w_profile(lambda r: np.exp(-0.5 * r * r))
        times = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]
        table, _ = solve_linear_radial(params12, prof, times, s_values=(0.0,))
        norms = table["W_Hs0_L2"]
        assert np.all(np.diff(norms) <= 1e-12)


class TestFitDecay:
    def test_exact_power_law(self):
        t = np.geomspace(1, 100, 30)
        fit = fit_decay(t, (1 + t) ** -0.5, (1, 100))
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0)

    def test_scale_invariance(self):
        t = np.geomspace(1, 100, 30)
        fit = fit_decay(t, 3 * (1 + t) ** -1.5, (1, 100))
        assert fit.slope == pytest.approx(-1.5, abs=1e-12)

    def test_noisy_monte_carlo(self):
        t = np.geomspace(1, 1000, 40)
        rng = np.random.default_rng(7)
        slopes = []
        for _ in range(100):
            noise = 1.0 + 0.01 * (2 * rng.random(t.size) - 1)
            fit = fit_decay(t, (1 + t) ** -0.75 * noise, (1, 1000))
            slopes.append(fit.slope)
        assert np.max(np.abs(np.array(slopes) + 0.75)) <= 0.02

    def test_too_few_samples(self):
        t = np.geomspace(1, 100, 30)
        with pytest.raises(ValueError, match="8 samples"):
            fit_decay(t, (1 + t) ** -1.0, (90, 100))

    def test_nonpositive_norm(self):
        t = np.geomspace(1, 100, 30)
        y = (1 + t) ** -1.0
        y[5] = 0.0
        with pytest.raises(ValueError, match="positive"):
            fit_decay(t, y, (1, 100))
