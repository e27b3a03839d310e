"""Balanced-exponent calculus and a pseudo-spectral solver for the coupled
semilinear system in 2D.

The gate functions are plain arithmetic on whatever number type is passed in
(floats or fractions.Fraction), so exactness checks can run the production
formulas unchanged.  The solver advances the Fourier-space first-order system
with first-order exponential time differencing: the linear flow is applied
exactly per frequency through the same stable 2x2 blocks as the linear
solvers, the nonlinearity |u|^p is evaluated pointwise in physical space on a
3/2 zero-padded grid, and the zero mode integrates its forced polynomial ODE
(which is what the block formulas reduce to at r = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .core import SystemParams
from .grid2d import DecayFit, SpectralField2D, fit_decay, lattice_frequencies
from .propagator import block_exp_pair, block_phi1_pair

__all__ = [
    "EPSILON0_NUMERIC",
    "ExponentReport",
    "BlowUpError",
    "CoupledField",
    "p_bal",
    "alpha_param",
    "loss_of_decay",
    "exponent_gate",
    "gate_search",
    "solve_semilinear",
    "decay_with_loss_check",
]

# Numeric stand-in for the arbitrarily small loss at exact balance.
EPSILON0_NUMERIC = 0.05

# The coupled state is one SpectralField2D: both displacement components with
# their velocities.
CoupledField = SpectralField2D


class BlowUpError(RuntimeError):
    """Raised when the semilinear solver detects norm blow-up."""

    def __init__(self, t: float, norm: float):
        super().__init__("blow-up detected at t=%g (norm %.3e)" % (t, norm))
        self.t = t
        self.norm = norm


def p_bal(m):
    """Balanced exponent 2(m+2)/(2-m) separating loss from no-loss."""
    return 2 * (m + 2) / (2 - m)


def alpha_param(m, k: int, p1, p2):
    """Balanced parameter alpha_k(m) for component k in {1, 2}."""
    pk = p1 if k == 1 else p2
    return (2 * (1 + m) + (3 * m + 2) * pk + m * p1 * p2) / (2 * (p1 * p2 - 1))


def loss_of_decay(m, p):
    """Loss value for one exponent: (loss, symbol).

    Returns 0 above balance, the numeric stand-in for the arbitrary small
    constant at exact balance (symbol "epsilon0"), and
    (2-m)/(2m) (p_bal - p) below balance.
    """
    pb = p_bal(m)
    if p > pb:
        return 0 * p, None
    if p == pb:
        return EPSILON0_NUMERIC, "epsilon0"
    return (2 - m) * (pb - p) / (2 * m), None


@dataclass(frozen=True)
class ExponentReport:
    """Gate verdict and all balanced-exponent quantities for one (m, p1, p2)."""

    m: float
    p1: float
    p2: float
    p_bal: float
    alpha1: float
    alpha2: float
    gate: str            # "case-1" | "case-2" | "case-3" | "fail"
    condition: str
    ell1: float | None
    ell2: float | None
    ell1_symbol: str | None = None
    ell2_symbol: str | None = None

    @property
    def passed(self) -> bool:
        return self.gate != "fail"

    def linear_rate(self) -> float:
        """Energy decay exponent of the linear problem, -(2-m)/(2m)."""
        return -(2 - self.m) / (2 * self.m)

    def to_dict(self) -> dict:
        return {
            "m": float(self.m), "p1": float(self.p1), "p2": float(self.p2),
            "p_bal": float(self.p_bal),
            "alpha1": float(self.alpha1), "alpha2": float(self.alpha2),
            "gate": self.gate, "condition": self.condition,
            "ell1": None if self.ell1 is None else float(self.ell1),
            "ell2": None if self.ell2 is None else float(self.ell2),
            "ell1_symbol": self.ell1_symbol, "ell2_symbol": self.ell2_symbol,
        }


def exponent_gate(m, p1, p2) -> ExponentReport:
    """Evaluate the global-existence gate for the weakly coupled system.

    Cases are checked in the theorem's order; a tuple that satisfies none of
    them yields gate="fail" (a value, not an error) and no loss values.
    """
    if not (1 <= m < 2):
        raise ValueError("m must lie in [1, 2)")
    if p1 <= 1 or p2 <= 1:
        raise ValueError("nonlinearity exponents must exceed 1")
    pb = p_bal(m)
    a1 = alpha_param(m, 1, p1, p2)
    a2 = alpha_param(m, 2, p1, p2)
    common = dict(m=m, p1=p1, p2=p2, p_bal=pb, alpha1=a1, alpha2=a2)

    if pb < p1 and pb < p2:
        return ExponentReport(gate="case-1", condition="p_bal < min(p1, p2)",
                              ell1=0 * p1, ell2=0 * p2, **common)
    if 2 / m <= p2 <= pb < p1 and a1 < 1:
        ell2, sym2 = loss_of_decay(m, p2)
        return ExponentReport(gate="case-2",
                              condition="alpha1 < 1 with 2/m <= p2 <= p_bal < p1",
                              ell1=0 * p1, ell2=ell2, ell2_symbol=sym2, **common)
    if 2 / m <= p1 <= pb < p2 and a2 < 1:
        ell1, sym1 = loss_of_decay(m, p1)
        return ExponentReport(gate="case-3",
                              condition="alpha2 < 1 with 2/m <= p1 <= p_bal < p2",
                              ell1=ell1, ell2=0 * p2, ell1_symbol=sym1, **common)
    return ExponentReport(gate="fail", condition="no case condition satisfied",
                          ell1=None, ell2=None, **common)


def gate_search(m, case: str, p_max: float = 40.0, step: float = 0.25):
    """Scan a rational grid of (p1, p2) and collect pairs hitting one case.

    An empty result for an infeasible request is a value, not an error.
    """
    if case not in ("case-1", "case-2", "case-3"):
        raise ValueError("case must be one of case-1, case-2, case-3")
    pb = p_bal(m)
    grid = list(np.arange(1.0 + step, min(p_max, 3 * pb) + step / 2, step))
    # the near-balance band matters for the mixed cases
    grid += [pb * f for f in (0.85, 0.9, 0.95, 0.99)]
    grid += list(np.arange(max(pb + step, 4.0), p_max + step / 2, 4 * step))
    grid = sorted(set(round(float(p), 6) for p in grid if p > 1))
    hits = []
    for q1 in grid:
        for q2 in grid:
            rep = exponent_gate(m, q1, q2)
            if rep.gate == case:
                hits.append((q1, q2, rep))
    return hits


# ---------------------------------------------------------------------------
# ETD solver


def _rfft_freq_geometry(n: int, L: float):
    k = lattice_frequencies(n, L)
    kx = k[:, None]
    ky = k[None, : n // 2 + 1]
    r = np.hypot(np.broadcast_to(kx, (n, n // 2 + 1)),
                 np.broadcast_to(ky, (n, n // 2 + 1)))
    safe = np.where(r > 0, r, 1.0)
    e1 = np.where(r > 0, kx / safe, 1.0)
    e2 = np.where(r > 0, ky / safe, 0.0)
    return r, e1, e2


def _companion_coeffs(params: SystemParams, r, dt: float):
    """Real ETD coefficient arrays for both speed channels of (v, v_t).

    Returns per channel (E11, E12, E21, E22, Q12, Q22) with
    e^{dt C} = [[E11, E12], [E21, E22]] for the companion block
    C = [[0, 1], [-c^2 r^2, -c^2 r^2]] and Q the phi1 weight of the forcing,
    which enters the velocity row only.
    """
    out = []
    for c in (params.b, params.a):
        mu, alpha, beta = block_exp_pair(c, r, dt)
        _, aq, bq = block_phi1_pair(c, r, dt)
        s = c * c * r * r
        E11 = (alpha - beta * mu).real
        E12 = beta.real
        E21 = (-beta * s).real
        E22 = (alpha + beta * mu).real
        Q12 = bq.real
        Q22 = (aq + bq * mu).real
        out.append((E11, E12, E21, E22, Q12, Q22))
    return out


def _pad_spectrum(f_hat: np.ndarray, n: int, m: int) -> np.ndarray:
    """Embed an n-grid rfft2 spectrum into an m-grid layout (m > n)."""
    out = np.zeros((m, m // 2 + 1), dtype=complex)
    h = n // 2
    out[:h, : n // 2 + 1] = f_hat[:h]
    out[m - h:, : n // 2 + 1] = f_hat[h:]
    return out


def _truncate_spectrum(f_hat: np.ndarray, m: int, n: int) -> np.ndarray:
    """Restrict an m-grid rfft2 spectrum back to the n-grid layout."""
    h = n // 2
    out = np.empty((n, n // 2 + 1), dtype=complex)
    out[:h] = f_hat[:h, : n // 2 + 1]
    out[h:] = f_hat[m - h:, : n // 2 + 1]
    return out


def solve_semilinear(params: SystemParams, field: SpectralField2D, p1: float,
                     p2: float, t_end: float, dt: float, output_times=None,
                     forcing_enabled: bool = True, dealias: bool = True,
                     blowup_factor: float = 1e6, workers: int = 1):
    """Integrate the weakly coupled system up to t_end with ETD1.

    ``field`` carries both displacement components and velocities; the
    nonlinearity couples them as (|u2|^p1, |u1|^p2) on the right-hand sides.
    Returns (table, final_field) where the table holds per-component L^2,
    H^1 and velocity norms plus the energy column used for decay fits.
    Raises BlowUpError when any norm exceeds blowup_factor times its
    initial value (or stops being finite).
    """
    if p1 <= 1 or p2 <= 1:
        raise ValueError("nonlinearity exponents must exceed 1")
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    n, L = field.n, field.L
    nsteps = int(round(t_end / dt))
    if abs(nsteps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be an integer multiple of dt")
    if output_times is None:
        output_times = np.unique(np.concatenate([[0.0], np.geomspace(max(dt, 1.0), t_end, 25)]))
    out_steps = sorted(set(int(round(t / dt)) for t in output_times if 0 <= t <= t_end + 1e-12))

    half = n // 2 + 1
    r, e1, e2 = _rfft_freq_geometry(n, L)
    (Eb, Ea) = _companion_coeffs(params, r, dt)

    # state: v = M(eta) u_hat and its velocity, rfft half-grid layout
    u_hat = field.u_hat[:, :, :half]
    ut_hat = field.ut_hat[:, :, :half]
    v = np.stack([e1 * u_hat[0] + e2 * u_hat[1], e2 * u_hat[0] - e1 * u_hat[1]])
    vt = np.stack([e1 * ut_hat[0] + e2 * ut_hat[1], e2 * ut_hat[0] - e1 * ut_hat[1]])

    m = (3 * n) // 2 if dealias else n
    phys_scale = m * m / (4.0 * L * L)

    col_weight = np.full(half, 2.0)
    col_weight[0] = 1.0
    col_weight[-1] = 1.0
    dxi = math.pi / L

    def component_norm(arr, s: float) -> float:
        mult = (r ** (2.0 * s)) if s else 1.0
        total = np.sum(col_weight[None, :] * (mult if s else 1.0) * np.abs(arr) ** 2)
        return float(np.sqrt(total) * dxi / (2.0 * math.pi))

    def u_components():
        return np.stack([e1 * v[0] + e2 * v[1], e2 * v[0] - e1 * v[1]]), \
               np.stack([e1 * vt[0] + e2 * vt[1], e2 * vt[0] - e1 * vt[1]])

    def physical(uh):
        if dealias:
            return sfft.irfft2(_pad_spectrum(uh, n, m), s=(m, m), workers=workers) * phys_scale
        return sfft.irfft2(uh, s=(n, n), workers=workers) * phys_scale

    def spectrum(fp):
        fh = sfft.rfft2(fp, workers=workers) / phys_scale
        return _truncate_spectrum(fh, m, n) if dealias else fh

    ncols = {}
    for k in (1, 2):
        for name in ("Hs0_L2", "Hs1_L2"):
            ncols[f"u{k}_{name}"] = []
        ncols[f"ut{k}_Hs0_L2"] = []
        ncols[f"u{k}_energy"] = []
    rows_t = []

    init_norm = None

    def record(step):
        nonlocal init_norm
        uh, uth = u_components()
        t = step * dt
        rows_t.append(t)
        seen = []
        for k in (1, 2):
            l2 = component_norm(uh[k - 1], 0.0)
            h1 = component_norm(uh[k - 1], 1.0)
            vtn = component_norm(uth[k - 1], 0.0)
            ncols[f"u{k}_Hs0_L2"].append(l2)
            ncols[f"u{k}_Hs1_L2"].append(h1)
            ncols[f"ut{k}_Hs0_L2"].append(vtn)
            ncols[f"u{k}_energy"].append(h1 + vtn)
            seen += [l2, h1, vtn]
        if not all(math.isfinite(x) for x in seen):
            raise BlowUpError(t, math.inf)
        worst = max(seen)
        if init_norm is None:
            init_norm = max(worst, 1e-300)
        if worst > blowup_factor * init_norm:
            raise BlowUpError(t, worst)

    if 0 in out_steps:
        record(0)
    for step in range(1, nsteps + 1):
        if forcing_enabled:
            uh, _ = u_components()
            with np.errstate(over="ignore", invalid="ignore"):
                g1 = spectrum(np.abs(physical(uh[1])) ** p1)
                g2 = spectrum(np.abs(physical(uh[0])) ** p2)
                Gv = np.stack([e1 * g1 + e2 * g2, e2 * g1 - e1 * g2])
        for i, (E11, E12, E21, E22, Q12, Q22) in enumerate((Eb, Ea)):
            vi, vti = v[i], vt[i]
            v_new = E11 * vi + E12 * vti
            vt_new = E21 * vi + E22 * vti
            if forcing_enabled:
                v_new += Q12 * Gv[i]
                vt_new += Q22 * Gv[i]
            v[i], vt[i] = v_new, vt_new
        if step in out_steps:
            record(step)

    table = {"t": np.asarray(rows_t)}
    for name, vals in ncols.items():
        table[name] = np.asarray(vals)

    uh, uth = u_components()
    full = SpectralField2D(n=n, L=L,
                           u_hat=_rfft_to_full(uh, n),
                           ut_hat=_rfft_to_full(uth, n))
    return table, full


def _rfft_to_full(arr_half: np.ndarray, n: int) -> np.ndarray:
    """Expand rfft half-grid components to the full n x n complex layout."""
    half = n // 2 + 1
    out = np.empty(arr_half.shape[:-2] + (n, n), dtype=complex)
    out[..., :half] = arr_half
    # Hermitian completion: f(-k) = conj(f(k))
    rows = (-np.arange(n)) % n
    cols = (-np.arange(half, n)) % n
    out[..., half:] = np.conj(out[..., rows[:, None], cols[None, :]])
    return out


def decay_with_loss_check(report: ExponentReport, table, window) -> dict:
    """Compare fitted per-component energy slopes against the predicted rate.

    The passing bound is -(2-m)/(2m) + ell_k + 0.1.  Requires a successful
    gate and a fit window spanning at least one decade.
    """
    if report.gate == "fail":
        raise ValueError("gate failed; the theorem makes no prediction here")
    lo, hi = float(window[0]), float(window[1])
    if hi < 10 * lo:
        raise ValueError("fit window must span at least one decade")
    out = {}
    for k, ell in ((1, report.ell1), (2, report.ell2)):
        fit = fit_decay(table["t"], table[f"u{k}_energy"], (lo, hi))
        bound = report.linear_rate() + float(ell) + 0.1
        out[k] = {"fit": fit, "bound": bound, "passed": bool(fit.slope <= bound)}
    return out
