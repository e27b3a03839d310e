"""Physical parameters and the Fourier-space first-order reformulation.

The displacement system

    u_tt - a^2 Lap u - (b^2 - a^2) grad div u
         + (-a^2 Lap - (b^2 - a^2) grad div) u_t = 0

becomes, per frequency xi, a 4-dimensional ODE W_t = Phi(|xi|) W after
rotating by M(eta) and scaling by the diagonal square root of the symbol.
This module owns the parameter validation, the coordinate changes between
(u, u_t), (v, v_t) and W, and the assembly of the coefficient matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemParams",
    "FrequencyPoint",
    "SystemMatrices",
    "make_params",
    "freq_from_xi",
    "freq_from_r",
    "assemble_matrices",
    "to_first_order",
    "from_first_order",
    "dc_evolve",
]


@dataclass(frozen=True)
class SystemParams:
    """Wave speeds of the isotropic medium, transverse a and longitudinal b."""

    a: float
    b: float


@dataclass(frozen=True)
class FrequencyPoint:
    """A frequency xi with its magnitude r and unit direction eta.

    eta is None at r = 0, where the direction is undefined.
    """

    xi: np.ndarray
    r: float
    eta: np.ndarray | None


@dataclass(frozen=True)
class SystemMatrices:
    """All coefficient matrices of the first-order system at one frequency."""

    A_eta: np.ndarray   # 2x2 symmetric positive definite, eigenvalues {a^2, b^2}
    M_eta: np.ndarray   # 2x2 orthogonal involution diagonalizing A_eta
    A_diag: np.ndarray  # r^2 * diag(b^2, a^2)
    B0: np.ndarray      # 4x4 real, positive semi-definite
    B1: np.ndarray      # 4x4 real diagonal
    Phi: np.ndarray     # -r^2/2 * B0 + i r B1


def make_params(a: float, b: float) -> SystemParams:
    """Validate and freeze the wave speeds, which must satisfy b > a > 0."""
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("wave speeds must be finite, got a=%r b=%r" % (a, b))
    if a <= 0:
        raise ValueError("a > 0 violated: a=%r" % a)
    if b <= a:
        raise ValueError("b > a violated: a=%r b=%r" % (a, b))
    return SystemParams(a=a, b=b)


def freq_from_xi(xi) -> FrequencyPoint:
    """Build a FrequencyPoint from a 2-vector of frequencies."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (2,):
        raise ValueError("xi must be a 2-vector, got shape %s" % (xi.shape,))
    r = float(np.hypot(xi[0], xi[1]))
    eta = xi / r if r > 0 else None
    return FrequencyPoint(xi=xi, r=r, eta=eta)


def freq_from_r(r: float, eta=(1.0, 0.0)) -> FrequencyPoint:
    """Build a FrequencyPoint from a magnitude and a unit direction."""
    r = float(r)
    if r < 0:
        raise ValueError("r must be nonnegative, got %r" % r)
    eta = np.asarray(eta, dtype=float)
    n = np.hypot(eta[0], eta[1])
    if r == 0:
        return FrequencyPoint(xi=np.zeros(2), r=0.0, eta=None)
    if not np.isclose(n, 1.0, atol=1e-12):
        eta = eta / n
    return FrequencyPoint(xi=r * eta, r=r, eta=eta)


def _m_matrix(eta: np.ndarray) -> np.ndarray:
    return np.array([[eta[0], eta[1]], [eta[1], -eta[0]]], dtype=float)


def assemble_matrices(params: SystemParams, freq: FrequencyPoint) -> SystemMatrices:
    """Assemble A(eta), M(eta), the diagonal symbol and the 4x4 system matrices.

    Phi depends on xi only through r; eta enters only through A(eta) and M(eta).
    """
    a2 = params.a ** 2
    b2 = params.b ** 2
    r = freq.r
    if freq.eta is not None:
        eta = freq.eta
        A_eta = a2 * np.eye(2) + (b2 - a2) * np.outer(eta, eta)
        M_eta = _m_matrix(eta)
    else:
        # Direction-free placeholders at r = 0; Phi(0) = 0 regardless.
        A_eta = a2 * np.eye(2) + (b2 - a2) * np.diag([1.0, 0.0])
        M_eta = _m_matrix(np.array([1.0, 0.0]))
    A_diag = r ** 2 * np.diag([b2, a2])
    B0 = np.array(
        [
            [b2, 0.0, b2, 0.0],
            [0.0, a2, 0.0, a2],
            [b2, 0.0, b2, 0.0],
            [0.0, a2, 0.0, a2],
        ]
    )
    B1 = np.diag([params.b, params.a, -params.b, -params.a])
    Phi = -0.5 * r ** 2 * B0 + 1j * r * B1
    return SystemMatrices(A_eta=A_eta, M_eta=M_eta, A_diag=A_diag, B0=B0, B1=B1, Phi=Phi)


def to_first_order(params: SystemParams, freq: FrequencyPoint, u_hat, ut_hat) -> np.ndarray:
    """Map Fourier data (u_hat, ut_hat) at one frequency to the 4-vector W.

    v = M(eta) u_hat (M is its own inverse); the upper pair is
    v_t + i r diag(b, a) v and the lower pair is v_t - i r diag(b, a) v.
    Rejects r = 0, where the scaling is singular; use dc_evolve there.
    """
    if freq.r <= 0:
        raise ValueError("to_first_order requires r > 0; the zero frequency "
                         "is handled by dc_evolve")
    u_hat = np.asarray(u_hat, dtype=complex)
    ut_hat = np.asarray(ut_hat, dtype=complex)
    M = _m_matrix(freq.eta)
    v = M @ u_hat
    vt = M @ ut_hat
    lam = freq.r * np.array([params.b, params.a])
    return np.concatenate([vt + 1j * lam * v, vt - 1j * lam * v])


def from_first_order(params: SystemParams, freq: FrequencyPoint, w) -> tuple[np.ndarray, np.ndarray]:
    """Invert to_first_order, returning (u_hat, ut_hat).

    The inverse divides by r, so amplitudes grow like |W|/r as r -> 0;
    r = 0 is rejected.
    """
    if freq.r <= 0:
        raise ValueError("from_first_order requires r > 0 (the map is "
                         "non-invertible at the zero frequency)")
    w = np.asarray(w, dtype=complex)
    upper, lower = w[:2], w[2:]
    vt = 0.5 * (upper + lower)
    lam = freq.r * np.array([params.b, params.a])
    v = (upper - lower) / (2j * lam)
    M = _m_matrix(freq.eta)
    return M @ v, M @ vt


def dc_evolve(u0_hat0, u1_hat0, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Evolve the zero-frequency mode, where the equation reduces to u_tt = 0."""
    if t < 0:
        raise ValueError("t must be nonnegative, got %r" % t)
    u0 = np.asarray(u0_hat0, dtype=complex)
    u1 = np.asarray(u1_hat0, dtype=complex)
    return u0 + t * u1, u1.copy()
