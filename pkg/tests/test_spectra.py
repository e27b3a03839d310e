import numpy as np
import pytest
from numpy.testing import assert_allclose

from ewkv.core import assemble_matrices, freq_from_r, make_params
from ewkv.spectra import (DegenerateSpectrumError, c_best, char_poly_coeffs,
                          decompose, default_scan_grid, dissipativity_scan,
                          eigenprojection, eigenvalues, eigenvalues_grid,
                          expand_large, expand_small, rho)

# measured once on the default 200-point scan grid for speeds (1, 2); the
# infimum sits at the left end where the ratio tends to a^2 (1 + r^2) / 2
C_BEST_12 = 0.5000005


def companion_roots(params, r):
    """Independent root oracle: companion-matrix eigensolve of the quartic."""
    return np.roots(char_poly_coeffs(params, r))


def backward_error(coef, lam):
    return abs(np.polyval(coef, lam)) / np.polyval(np.abs(coef), abs(lam))


class TestCharPoly:
    def test_example_coeffs(self, params12):
        assert_allclose(char_poly_coeffs(params12, 1.0), [1, 5, 9, 8, 4])

    def test_r_zero_quadruple_root(self, params12):
        assert_allclose(char_poly_coeffs(params12, 0.0), [1, 0, 0, 0, 0])

    @pytest.mark.parametrize("r", np.geomspace(1e-3, 1e3, 13))
    def test_oracle_roots_satisfy_residual(self, params12, r):
        coef = char_poly_coeffs(params12, r)
        for lam in companion_roots(params12, r):
            assert backward_error(coef, lam) <= 1e-10

    @pytest.mark.parametrize("r", np.geomspace(1e-3, 1e3, 13))
    def test_production_roots_satisfy_residual(self, params12, r):
        coef = char_poly_coeffs(params12, r)
        scale = 1e-10 * max(1.0, (1 + 4) ** 2 * r ** 4)
        for lam in eigenvalues(params12, r):
            assert backward_error(coef, lam) <= 1e-10
            if abs(lam) <= 2.0:
                # the literal absolute bound is meaningful for the bounded
                # branches, where evaluation scale matches the coefficients
                assert abs(np.polyval(coef, lam)) <= scale


class TestEigenvalues:
    def test_small_r_example(self, params12):
        lam = eigenvalues(params12, 1e-3)
        exact = companion_roots(params12, 1e-3)
        nearest = exact[np.argmin(abs(exact - lam[0]))]
        assert abs(lam[0] - (2e-3j - 2e-6)) < 5e-9
        assert abs(lam[0] - nearest) < 1e-12

    def test_large_r_example(self, params12):
        lam = eigenvalues(params12, 100.0)
        assert lam[0] == pytest.approx(-1 - 0.25e-4, abs=1e-8)
        assert lam[2] == pytest.approx(-4e4 + 1 + 0.25e-4, abs=1e-4)

    @pytest.mark.parametrize("r", [1e-2, 0.3, 1.5, 7.0, 300.0])
    def test_conjugate_symmetry_and_oracle_match(self, params12, r):
        lam = eigenvalues(params12, r)
        key = lambda z: (round(z.real, 9), round(z.imag, 9))
        assert sorted(map(key, lam)) == sorted(map(key, np.conj(lam)))
        oracle = companion_roots(params12, r)
        for z in lam:
            assert np.min(np.abs(oracle - z)) <= 1e-8 * max(1.0, abs(z))

    def test_branch_continuity_outside_degeneracies(self, params12):
        grid = np.geomspace(1e-3, 1e3, 1000)
        lams = eigenvalues_grid(params12, grid)
        collisions = (2.0 / params12.b, 2.0 / params12.a)
        for i in range(len(grid) - 1):
            if any(grid[i] < c <= grid[i + 1] for c in collisions):
                continue
            for j in range(4):
                gap = min(abs(lams[k, i] - lams[j, i]) for k in range(4) if k != j)
                assert abs(lams[j, i + 1] - lams[j, i]) < gap

    def test_labels_match_small_expansion(self, params12):
        r = 5e-3
        lam = eigenvalues(params12, r)
        approx = expand_small(params12, r, 2).approx_lambdas
        assert np.all(np.abs(lam - approx) < 1e-6)

    def test_labels_match_large_expansion(self, params12):
        r = 50.0
        lam = eigenvalues(params12, r)
        approx = expand_large(params12, r).approx_lambdas
        assert np.all(np.abs(lam - approx) / np.maximum(1, np.abs(lam)) < 1e-4)


class TestEigenprojections:
    def test_near_diagonal_at_small_r(self, params12):
        r = 1e-3
        P1 = eigenprojection(params12, r, 1)
        assert np.linalg.norm(P1 - np.diag([1, 0, 0, 0])) < 5 * r

    def test_large_r_limit_matrix(self, params12):
        r = 1e3
        P1 = eigenprojection(params12, r, 1)
        target = 0.5 * np.array([[1, 0, -1, 0], [0, 0, 0, 0],
                                 [-1, 0, 1, 0], [0, 0, 0, 0]])
        assert np.linalg.norm(P1 - target) < 5.0 / r

    @pytest.mark.parametrize("r", [0.01, 0.5, 3.0, 200.0])
    def test_completeness_and_algebra(self, params12, r):
        dec = decompose(params12, r)
        assert not dec.degenerate
        P = dec.projections
        assert np.linalg.norm(sum(P) - np.eye(4)) <= 1e-8
        for j in range(4):
            for k in range(4):
                target = P[j] if j == k else np.zeros((4, 4))
                assert np.linalg.norm(P[j] @ P[k] - target) <= 1e-6

    @pytest.mark.parametrize("r", [0.01, 0.5, 3.0])
    def test_matches_literal_product_formula(self, params12, r):
        # the blockwise evaluation is the same product, grouped stably
        dec = decompose(params12, r)
        Phi = assemble_matrices(params12, freq_from_r(r)).Phi
        for j in range(4):
            P = np.eye(4, dtype=complex)
            for k in range(4):
                if k != j:
                    P = P @ (Phi - dec.lambdas[k] * np.eye(4))
                    P = P / (dec.lambdas[j] - dec.lambdas[k])
            assert np.linalg.norm(P - dec.projections[j]) < 1e-10

    def test_degenerate_double_root_flagged(self, params12):
        # b r = 2 at r = 1 for b = 2
        dec = decompose(params12, 1.0)
        assert dec.degenerate and dec.projections is None
        with pytest.raises(DegenerateSpectrumError, match="dense"):
            eigenprojection(params12, 1.0, 1)

    def test_bad_branch_label(self, params12):
        with pytest.raises(ValueError):
            eigenprojection(params12, 0.5, 5)


class TestExpansions:
    def test_small_order2_example(self, params12):
        res = expand_small(params12, 0.01, 2)
        assert res.approx_lambdas[2] == pytest.approx(0.01j - 5e-5)
        assert res.regime == "small" and res.order == 2

    def test_small_error_slope(self, params12):
        rs = np.geomspace(1e-3, 1e-1, 25)
        errs = [np.max(np.abs(eigenvalues(params12, r)
                              - expand_small(params12, r, 2).approx_lambdas))
                for r in rs]
        slope = np.polyfit(np.log(rs), np.log(errs), 1)[0]
        assert slope >= 2.9

    def test_large_error_slope(self, params12):
        rs = np.geomspace(10, 1e3, 25)
        errs = [np.max(np.abs(eigenvalues(params12, r)
                              - expand_large(params12, r).approx_lambdas))
                for r in rs]
        slope = np.polyfit(np.log(rs), np.log(errs), 1)[0]
        assert slope <= -2.9

    def test_order1_drops_quadratic_term(self, params12):
        res = expand_small(params12, 0.01, 1)
        assert res.approx_lambdas[0] == pytest.approx(0.02j)


class TestDissipativity:
    def test_rho_value(self):
        assert rho(1.0) == pytest.approx(0.5)

    def test_scan_positive_and_frozen_value(self, params12):
        c, worst_r = dissipativity_scan(params12, default_scan_grid())
        assert c > 0
        assert c == pytest.approx(C_BEST_12, abs=1e-6)
        assert worst_r == pytest.approx(1e-3)

    def test_small_r_limit_ratio(self, params12):
        r = 1e-4
        lam = eigenvalues(params12, r)
        ratio = -np.max(lam.real) / rho(r)
        assert ratio == pytest.approx(0.5, abs=1e-6)

    def test_abscissa_bound_on_grid(self, params12):
        grid = default_scan_grid()
        c = c_best(params12)
        lams = eigenvalues_grid(params12, grid)
        margin = np.max(lams.real.max(axis=0) + c * rho(grid))
        assert margin <= 1e-12

    def test_bad_grid_rejected(self, params12):
        with pytest.raises(ValueError):
            dissipativity_scan(params12, [-1.0, 1.0])
