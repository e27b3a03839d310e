"""3D treatment: Helmholtz decoupling, scalar viscoelastic solves, exponents.

Splitting u into a curl-free (potential) and a divergence-free (solenoidal)
part diagonalizes the 3D system per frequency into two scalar damped wave
equations with speeds b and a.  Each evolves through the same characteristic
quadratic lambda^2 + c^2 r^2 (lambda + 1) = 0 that governs the 2D branches,
so the 2x2 block machinery of the propagator module applies verbatim,
including the confluent double-root case c r = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import SystemParams
from .grid2d import DecayFit, fit_decay
from .propagator import block_exp_pair
from .semilinear2d import EPSILON0_NUMERIC

__all__ = [
    "HelmholtzParts",
    "ExponentReport3D",
    "helmholtz_split",
    "solve_decoupled",
    "verify_decoupling",
    "radial_grid_3d",
    "decay_3d_linear",
    "p_bal_3d",
    "alpha1_3d",
    "alpha2_3d",
    "exponent_gate_3d",
]


@dataclass(frozen=True)
class HelmholtzParts:
    """Curl-free and divergence-free parts of one Fourier mode."""

    potential: np.ndarray
    solenoidal: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.potential + self.solenoidal


def helmholtz_split(xi, u_hat) -> HelmholtzParts:
    """Split a 3-vector mode into its potential and solenoidal parts.

    potential = (xi . u / |xi|^2) xi is parallel to xi; the remainder is
    orthogonal to xi.  The zero frequency has no direction and is rejected.
    """
    xi = np.asarray(xi, dtype=float)
    u_hat = np.asarray(u_hat, dtype=complex)
    if xi.shape != (3,) or u_hat.shape != (3,):
        raise ValueError("xi and u_hat must be 3-vectors")
    r2 = float(xi @ xi)
    if r2 == 0:
        raise ValueError("helmholtz_split requires xi != 0; the zero mode "
                         "is handled separately")
    pot = (xi @ u_hat) / r2 * xi
    return HelmholtzParts(potential=pot, solenoidal=u_hat - pot)


def _evolve_scalar_pair(params: SystemParams, c: float, r: float, t: float,
                        y, yt):
    """Evolve (y, y_t) of y'' + c^2 r^2 (y + y') = 0, componentwise."""
    mu, alpha, beta = block_exp_pair(c, np.asarray(r, dtype=float), t)
    s = c * c * r * r
    e11 = alpha - beta * mu
    e12 = beta
    e21 = -beta * s
    e22 = alpha + beta * mu
    return e11 * y + e12 * yt, e21 * y + e22 * yt


def solve_decoupled(params: SystemParams, xi, parts: HelmholtzParts,
                    parts_t: HelmholtzParts, t: float):
    """Evolve split data to time t: speed b on the potential part, a on the
    solenoidal part.  Returns (parts(t), parts_t(t))."""
    xi = np.asarray(xi, dtype=float)
    r = float(np.linalg.norm(xi))
    if r <= 0:
        raise ValueError("requires |xi| > 0")
    if t < 0:
        raise ValueError("t must be nonnegative")
    pot, pot_t = _evolve_scalar_pair(params, params.b, r, t,
                                     parts.potential, parts_t.potential)
    sol, sol_t = _evolve_scalar_pair(params, params.a, r, t,
                                     parts.solenoidal, parts_t.solenoidal)
    return (HelmholtzParts(potential=pot, solenoidal=sol),
            HelmholtzParts(potential=pot_t, solenoidal=sol_t))


def verify_decoupling(params: SystemParams, xi, u0_hat, u1_hat, t: float) -> float:
    """Residual between split-evolve-recombine and the full 6x6 evolution.

    The full per-frequency system is u_tt + r^2 A3(eta) (u + u_t) = 0 with
    A3 = a^2 I + (b^2 - a^2) eta eta^T, integrated by the dense matrix
    exponential of the companion form.
    """
    xi = np.asarray(xi, dtype=float)
    u0 = np.asarray(u0_hat, dtype=complex)
    u1 = np.asarray(u1_hat, dtype=complex)
    r = float(np.linalg.norm(xi))
    if r <= 0:
        raise ValueError("requires |xi| > 0")
    eta = xi / r
    A3 = params.a ** 2 * np.eye(3) + (params.b ** 2 - params.a ** 2) * np.outer(eta, eta)
    C = np.zeros((6, 6))
    C[:3, 3:] = np.eye(3)
    C[3:, :3] = -r * r * A3
    C[3:, 3:] = -r * r * A3
    state = np.concatenate([u0, u1])
    ref = expm(t * C) @ state

    parts0 = helmholtz_split(xi, u0)
    parts1 = helmholtz_split(xi, u1)
    pt, ptt = solve_decoupled(params, xi, parts0, parts1, t)
    got = np.concatenate([pt.total, ptt.total])
    return float(np.linalg.norm(got - ref))


# ---------------------------------------------------------------------------
# linear decay in 3D


def radial_grid_3d(r_min: float = 1e-4, r_max: float = 1e3,
                   n_nodes: int = 2048, panel_degree: int = 16):
    """Gauss-Legendre nodes/weights with the 3D measure r^2 dr folded in."""
    from .grid2d import radial_grid

    nodes, w_rdr = radial_grid(r_min, r_max, n_nodes, panel_degree)
    return nodes, w_rdr * nodes  # upgrade r dr -> r^2 dr


def decay_3d_linear(params: SystemParams, u0_radial, u1_radial, times,
                    m: float = 1.0, s: float = 0.0, window=None, grid=None):
    """Measure 3D solution and energy decay for scalar radial data.

    ``u0_radial``/``u1_radial`` are callables of r (or None).  The data is
    placed in both the potential and the solenoidal channel, evolved exactly,
    and the L^2 norm of u plus the order-s energy norm are tabulated and
    fitted on the window.  Returns a dict with the table, both fits and the
    predicted exponents -(6-5m)/(4m) and -(6-3m+2sm)/(4m).
    """
    nodes, weights = radial_grid_3d() if grid is None else grid
    times = np.asarray(times, dtype=float)
    zero = np.zeros_like(nodes, dtype=complex)
    y0 = np.asarray(u0_radial(nodes), dtype=complex) if u0_radial else zero
    y1 = np.asarray(u1_radial(nodes), dtype=complex) if u1_radial else zero

    sol = np.empty(times.size)
    energy = np.empty(times.size)
    const = 4.0 * math.pi / (2.0 * math.pi) ** 3
    for i, t in enumerate(times):
        acc_u = np.zeros_like(nodes)
        acc_e = np.zeros_like(nodes)
        for c in (params.b, params.a):
            y, yt = _evolve_scalar_pair(params, c, nodes, float(t), y0, y1)
            acc_u += np.abs(y) ** 2
            acc_e += nodes ** (2 * s) * (nodes ** 2 * np.abs(y) ** 2 + np.abs(yt) ** 2)
        sol[i] = math.sqrt(const * float(np.sum(weights * acc_u)))
        energy[i] = math.sqrt(const * float(np.sum(weights * acc_e)))

    if window is None:
        window = (float(times[0]), float(times[-1]))
    table = {"t": times, "u_L2": sol, f"energy_Hs{s:g}": energy}
    return {
        "table": table,
        "fit_solution": fit_decay(times, sol, window),
        "fit_energy": fit_decay(times, energy, window),
        "predicted_solution": -(6 - 5 * m) / (4 * m),
        "predicted_energy": -(6 - 3 * m + 2 * s * m) / (4 * m),
    }


# ---------------------------------------------------------------------------
# 3D exponent calculus


def p_bal_3d(m):
    """3D balanced exponent (3 + 2m)/(3 - m)."""
    return (3 + 2 * m) / (3 - m)


def alpha1_3d(m, p1, p2):
    """First 3D balanced parameter, controlling the (p1, p2) pair."""
    return m * (2 + 3 * p2 + p1 * p2) / (2 * (p1 * p2 - 1))


def alpha2_3d(m, p1, p2, p3):
    """Second (double-tilde) 3D balanced parameter for the full triple."""
    return m * (2 + 3 * (p2 + 1) * p3 + p1 * p2 * p3) / (2 * (p1 * p2 * p3 - 1))


def _loss1_3d(m, p1):
    pb = p_bal_3d(m)
    if p1 > pb:
        return 0 * p1, None
    if p1 == pb:
        return EPSILON0_NUMERIC, "epsilon0"
    return (3 - m) * (pb - p1) / (2 * m), None


def _loss2_3d(m, p1, p2):
    pb = p_bal_3d(m)
    if p2 > pb:
        return 0 * p2, None
    if p2 == pb:
        return EPSILON0_NUMERIC, "epsilon0"
    return (3 - m) * ((pb - p1) * p2 + (pb - p2)) / (2 * m), None


@dataclass(frozen=True)
class ExponentReport3D:
    """Gate verdict and balanced quantities for one 3D tuple (m, p1, p2, p3)."""

    m: float
    p1: float
    p2: float
    p3: float
    p_bal_3d: float
    alpha1_3d: float
    alpha2_3d: float
    gate: str
    condition: str
    ell1: float | None
    ell2: float | None
    ell3: float | None
    ell1_symbol: str | None = None
    ell2_symbol: str | None = None

    @property
    def passed(self) -> bool:
        return self.gate != "fail"

    def to_dict(self) -> dict:
        return {
            "m": float(self.m),
            "p1": float(self.p1), "p2": float(self.p2), "p3": float(self.p3),
            "p_bal_3d": float(self.p_bal_3d),
            "alpha1_3d": float(self.alpha1_3d), "alpha2_3d": float(self.alpha2_3d),
            "gate": self.gate, "condition": self.condition,
            "ell1": None if self.ell1 is None else float(self.ell1),
            "ell2": None if self.ell2 is None else float(self.ell2),
            "ell3": None if self.ell3 is None else float(self.ell3),
            "ell1_symbol": self.ell1_symbol, "ell2_symbol": self.ell2_symbol,
        }


def exponent_gate_3d(m, p1, p2, p3) -> ExponentReport3D:
    """3D global-existence gate for strictly ordered exponents p1 < p2 < p3.

    The ordering is a hypothesis of the underlying result, so violations are
    an error rather than a failed gate; failing every case condition
    (including p3 <= 3) is a value.
    """
    if not (1 <= m < 1.2):
        raise ValueError("m must lie in [1, 6/5)")
    if not (1 < p1 < p2 < p3):
        raise ValueError("ordering violation: need 1 < p1 < p2 < p3")
    pb = p_bal_3d(m)
    a1 = alpha1_3d(m, p1, p2)
    a2 = alpha2_3d(m, p1, p2, p3)
    common = dict(m=m, p1=p1, p2=p2, p3=p3, p_bal_3d=pb,
                  alpha1_3d=a1, alpha2_3d=a2)

    if pb < p1 and p3 <= 3:
        return ExponentReport3D(gate="case-1", condition="p_bal_3d < p1 < p2 < p3 <= 3",
                                ell1=0 * p1, ell2=0 * p2, ell3=0 * p3, **common)
    if 2 / m <= p1 <= pb < p2 and p3 <= 3 and a1 < 3 / 2:
        ell1, sym1 = _loss1_3d(m, p1)
        return ExponentReport3D(gate="case-2",
                                condition="alpha1_3d < 3/2 with 2/m <= p1 <= p_bal_3d < p2 < p3 <= 3",
                                ell1=ell1, ell2=0 * p2, ell3=0 * p3,
                                ell1_symbol=sym1, **common)
    if 2 / m <= p1 < p2 <= pb < p3 and p3 <= 3 and a2 < 3 / 2:
        ell1, sym1 = _loss1_3d(m, p1)
        ell2, sym2 = _loss2_3d(m, p1, p2)
        return ExponentReport3D(gate="case-3",
                                condition="alpha2_3d < 3/2 with 2/m <= p1 < p2 <= p_bal_3d < p3 <= 3",
                                ell1=ell1, ell2=ell2, ell3=0 * p3,
                                ell1_symbol=sym1, ell2_symbol=sym2, **common)
    return ExponentReport3D(gate="fail", condition="no case condition satisfied",
                            ell1=None, ell2=None, ell3=None, **common)
