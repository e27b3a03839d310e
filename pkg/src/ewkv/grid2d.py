"""Two numerical realizations of the 2D linear evolution, plus norms and fits.

The radial path exploits that Phi depends on xi only through r = |xi|: data
given as 4-vectors W(r) on a composite Gauss-Legendre grid is evolved exactly
per node and integrated with the plane measure r dr.  The lattice path is an
n x n FFT grid at the (u, u_t) level with frequencies (pi/L) k on a box of
half-width L; it converts each mode to W, propagates, converts back, and
evolves the zero mode by its exact polynomial solution.

Decay exponents are measured as least-squares slopes of log(norm) against
log(1 + t).  All norm reductions use numpy's fixed-order pairwise summation,
so repeated runs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import SystemParams, dc_evolve
from .propagator import apply_w_blocks

__all__ = [
    "RadialProfile",
    "SpectralField2D",
    "DecayFit",
    "DataDescriptor",
    "make_data",
    "radial_grid",
    "w_profile",
    "w_profile_from_data",
    "hs_norm_radial",
    "lattice_frequencies",
    "lattice_field_from_data",
    "hs_norm_lattice",
    "sup_norm_lattice",
    "norm_suite",
    "solve_linear_radial",
    "solve_linear_lattice",
    "fit_decay",
]


# ---------------------------------------------------------------------------
# data descriptors with analytic Fourier transforms


@dataclass(frozen=True)
class DataDescriptor:
    """Analytic initial-data profile; scalar, used per displacement component.

    kind "gaussian": unit-mass Gaussian of width ``scale`` in physical space,
    transform exp(-scale^2 |xi|^2 / 2), positive at xi = 0.
    kind "d_gaussian": x1-derivative of that Gaussian; transform
    i xi_1 exp(-...) vanishes linearly at 0, so the mass is zero while the
    first moment norm stays finite.
    kind "ring": smooth radial bump exp(-((r-1)/(0.15 scale))^2) in Fourier
    space, concentrated in the middle frequency zone.
    """

    kind: str
    scale: float
    amplitude: float = 1.0

    def scaled(self, amplitude: float) -> "DataDescriptor":
        return replace(self, amplitude=self.amplitude * float(amplitude))

    def fourier(self, xi1, xi2):
        """Transform on a 2D frequency grid."""
        xi1 = np.asarray(xi1, dtype=float)
        xi2 = np.asarray(xi2, dtype=float)
        r2 = xi1 * xi1 + xi2 * xi2
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-0.5 * self.scale ** 2 * r2) + 0j
        if self.kind == "d_gaussian":
            return self.amplitude * 1j * xi1 * np.exp(-0.5 * self.scale ** 2 * r2)
        if self.kind == "ring":
            w = 0.15 * self.scale
            return self.amplitude * np.exp(-(((np.sqrt(r2) - 1.0) / w) ** 2)) + 0j
        raise ValueError("unknown data kind %r" % self.kind)

    def fourier_radial(self, r):
        """Radial magnitude profile used by the radial W-level machinery.

        For the non-radial d_gaussian this is the radial majorant
        r exp(-scale^2 r^2 / 2); the angular factor only rescales constants.
        """
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-0.5 * self.scale ** 2 * r * r) + 0j
        if self.kind == "d_gaussian":
            return self.amplitude * r * np.exp(-0.5 * self.scale ** 2 * r * r) + 0j
        if self.kind == "ring":
            w = 0.15 * self.scale
            return self.amplitude * np.exp(-(((r - 1.0) / w) ** 2)) + 0j
        raise ValueError("unknown data kind %r" % self.kind)

    @property
    def value_at_zero(self) -> complex:
        """Transform at xi = 0, i.e. the integral of the data."""
        if self.kind in ("gaussian",):
            return complex(self.amplitude)
        if self.kind == "d_gaussian":
            return 0j
        if self.kind == "ring":
            w = 0.15 * self.scale
            return complex(self.amplitude * math.exp(-((1.0 / w) ** 2)))
        raise ValueError("unknown data kind %r" % self.kind)

    def abs_ring_mass(self, rho):
        """Angular integral of |data| on the physical circle of radius rho.

        Available for the kinds with closed physical-space form; the ring
        profile has no elementary physical representation and raises.
        """
        rho = np.asarray(rho, dtype=float)
        s2 = self.scale ** 2
        g = np.exp(-0.5 * rho * rho / s2) / (2.0 * math.pi * s2)
        if self.kind == "gaussian":
            return abs(self.amplitude) * 2.0 * math.pi * rho * g
        if self.kind == "d_gaussian":
            return abs(self.amplitude) * 4.0 * rho * rho * g / s2
        raise ValueError("no analytic physical-space form for kind %r" % self.kind)


def make_data(kind: str, scale: float) -> DataDescriptor:
    """Descriptor for one of the analytic data families."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if kind not in ("gaussian", "d_gaussian", "ring"):
        raise ValueError("unknown data kind %r" % kind)
    return DataDescriptor(kind=kind, scale=float(scale))


# ---------------------------------------------------------------------------
# radial quadrature


@dataclass(frozen=True)
class RadialProfile:
    """W-level data on a radial quadrature grid.

    ``weights`` absorb the plane measure: integral f(r) r dr ~ sum w_i f(r_i).
    ``values`` has shape (n_nodes, 4).
    """

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray


def radial_grid(r_min: float = 1e-4, r_max: float = 1e3,
                n_nodes: int = 2048, panel_degree: int = 16):
    """Composite Gauss-Legendre nodes/weights on log-spaced panels.

    Returns (nodes, weights) with the r dr measure folded into the weights.
    """
    if not (0 < r_min < r_max):
        raise ValueError("need 0 < r_min < r_max")
    n_panels = max(1, n_nodes // panel_degree)
    edges = np.geomspace(r_min, r_max, n_panels + 1)
    x, w = np.polynomial.legendre.leggauss(panel_degree)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    nodes = (0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w[None, :]).ravel() * nodes
    return nodes, weights


def w_profile(fn, direction=(1.0, 0.0, 0.0, 0.0), grid=None) -> RadialProfile:
    """Radial profile with W(r) = fn(r) * direction."""
    nodes, weights = radial_grid() if grid is None else grid
    d = np.asarray(direction, dtype=complex)
    vals = np.asarray(fn(nodes), dtype=complex)[:, None] * d[None, :]
    return RadialProfile(nodes=nodes, weights=weights, values=vals)


def w_profile_from_data(params: SystemParams, u0: DataDescriptor | None,
                        u1: DataDescriptor | None, grid=None) -> RadialProfile:
    """W-level profile of u-level radial data (u0, u1), both components equal.

    Built at the fixed direction eta = (1, 0); since M(eta) is orthogonal and
    the evolution depends on eta in no other way, radial norms computed this
    way agree with the full angular average exactly.
    """
    nodes, weights = radial_grid() if grid is None else grid
    g0 = u0.fourier_radial(nodes) if u0 is not None else np.zeros_like(nodes, dtype=complex)
    g1 = u1.fourier_radial(nodes) if u1 is not None else np.zeros_like(nodes, dtype=complex)
    # v = M u_hat with u_hat = (g0, g0) at eta = (1, 0): v = (g0, -g0)
    v = np.stack([g0, -g0])
    vt = np.stack([g1, -g1])
    lam = nodes[None, :] * np.array([params.b, params.a])[:, None]
    vals = np.concatenate([vt + 1j * lam * v, vt - 1j * lam * v]).T
    return RadialProfile(nodes=nodes, weights=weights, values=np.ascontiguousarray(vals))


def hs_norm_radial(profile: RadialProfile, s: float = 0.0,
                   multiplier=None) -> float:
    """Homogeneous H^s norm (physical-space convention) of the profile.

    norm^2 = (2 pi)^{-2} * 2 pi * integral r^{2s} |W(r)|^2 r dr, i.e. the
    Parseval-scaled plane integral, so radial and lattice norms of the same
    field agree.  An optional extra radial multiplier (for zone cutoffs) is
    applied inside the square.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    dens = np.sum(np.abs(profile.values) ** 2, axis=1)
    mult = profile.nodes ** (2.0 * s)
    if multiplier is not None:
        m = np.asarray(multiplier, dtype=float)
        mult = mult * m * m
    total = np.sum(profile.weights * mult * dens) / (2.0 * math.pi)
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# FFT lattice


@dataclass
class SpectralField2D:
    """Fourier coefficients of (u, u_t) on an n x n lattice.

    Frequencies are (pi / L) k per axis in FFT order; n must be a power of
    two.  u_hat and ut_hat have shape (2, n, n), one slice per displacement
    component; Hermitian symmetry holds whenever the physical field is real.
    """

    n: int
    L: float
    u_hat: np.ndarray
    ut_hat: np.ndarray

    def copy(self) -> "SpectralField2D":
        return SpectralField2D(self.n, self.L, self.u_hat.copy(), self.ut_hat.copy())


def lattice_frequencies(n: int, L: float):
    """1D frequency array (pi/L) k in FFT order."""
    return 2.0 * math.pi * np.fft.fftfreq(n, d=2.0 * L / n)


def lattice_field_from_data(n: int, L: float, u0: DataDescriptor | None,
                            u1: DataDescriptor | None) -> SpectralField2D:
    """Sample descriptors on the lattice; both displacement components equal."""
    if n & (n - 1):
        raise ValueError("n must be a power of two")
    k = lattice_frequencies(n, L)
    x1, x2 = np.meshgrid(k, k, indexing="ij")
    zero = np.zeros((n, n), dtype=complex)
    f0 = u0.fourier(x1, x2) if u0 is not None else zero
    f1 = u1.fourier(x1, x2) if u1 is not None else zero
    return SpectralField2D(n=n, L=float(L),
                           u_hat=np.stack([f0, f0.copy()]),
                           ut_hat=np.stack([f1, f1.copy()]))


def hs_norm_lattice(coeffs: np.ndarray, n: int, L: float, s: float = 0.0) -> float:
    """H^s norm from lattice coefficients via the discrete Parseval sum.

    ``coeffs`` may carry leading component axes; they are summed in square.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    k = lattice_frequencies(n, L)
    r2 = k[:, None] ** 2 + k[None, :] ** 2
    mult = r2 ** s if s else np.ones_like(r2)
    if s:
        mult = mult.copy()
        mult[0, 0] = 0.0  # |0|^{2s} with s>0
    dens = np.sum(np.abs(coeffs) ** 2, axis=tuple(range(coeffs.ndim - 2)))
    total = np.sum(mult * dens)
    dxi = math.pi / L
    return float(np.sqrt(total) * dxi / (2.0 * math.pi))


def sup_norm_lattice(coeffs: np.ndarray, n: int, L: float) -> float:
    """Sup norm of the physical-space field over the lattice samples.

    Leading axes are treated as components of one stacked quantity.
    """
    flat = coeffs.reshape((-1, n, n))
    phys = np.fft.ifft2(flat, axes=(-2, -1)) * (n * n / (4.0 * L * L))
    return float(np.max(np.abs(phys)))


def norm_suite(obj, s: float = 0.0, q: float | int = 2, which: str = "u") -> float:
    """Norm dispatcher for profiles and lattice fields.

    q = 2 gives the homogeneous H^s norm; q = inf (lattice only) the sup of
    the physical samples.  ``which`` selects 'u' or 'ut' on lattice fields.
    """
    if isinstance(obj, RadialProfile):
        if q in (2, 2.0):
            return hs_norm_radial(obj, s)
        raise ValueError("q=inf is unsupported on radial profiles; "
                         "use the lattice representation")
    if isinstance(obj, SpectralField2D):
        coeffs = obj.u_hat if which == "u" else obj.ut_hat
        if q in (2, 2.0):
            return hs_norm_lattice(coeffs, obj.n, obj.L, s)
        if q == math.inf or q == "inf":
            if s:
                k = lattice_frequencies(obj.n, obj.L)
                rmul = np.sqrt(k[:, None] ** 2 + k[None, :] ** 2) ** s
                coeffs = coeffs * rmul
            return sup_norm_lattice(coeffs, obj.n, obj.L)
        raise ValueError("q must be 2 or inf")
    raise TypeError("unsupported field type %r" % type(obj))


# ---------------------------------------------------------------------------
# linear solvers


def evolve_radial(params: SystemParams, profile: RadialProfile, t: float) -> RadialProfile:
    """Exact evolution of a radial W profile to time t."""
    out = apply_w_blocks(params, profile.nodes, float(t), profile.values.T)
    return RadialProfile(nodes=profile.nodes, weights=profile.weights,
                         values=np.ascontiguousarray(out.T))


def solve_linear_radial(params: SystemParams, profile: RadialProfile, times,
                        s_values=(0.0, 1.0), keep_profiles: bool = False):
    """Evolve the profile over the given times and tabulate H^s norms.

    Returns (table, profiles) where the table maps 't' and 'W_Hs{s}_L2'
    column names to arrays; profiles is a list of evolved RadialProfile
    objects when requested, else None.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be nonnegative and ascending")
    cols = {f"W_Hs{s:g}_L2": np.empty(times.size) for s in s_values}
    kept = [] if keep_profiles else None
    for i, t in enumerate(times):
        pt = evolve_radial(params, profile, t)
        for s in s_values:
            cols[f"W_Hs{s:g}_L2"][i] = hs_norm_radial(pt, s)
        if keep_profiles:
            kept.append(pt)
    table = {"t": times}
    table.update(cols)
    return table, kept


def _lattice_to_w(params: SystemParams, field: SpectralField2D):
    """Per-frequency change of variables (u, u_t) -> W on the whole lattice."""
    n, L = field.n, field.L
    k = lattice_frequencies(n, L)
    x1 = np.broadcast_to(k[:, None], (n, n))
    x2 = np.broadcast_to(k[None, :], (n, n))
    r = np.hypot(x1, x2)
    safe = np.where(r > 0, r, 1.0)
    e1 = np.where(r > 0, x1 / safe, 1.0)  # eta placeholder (1,0) at the zero mode
    e2 = np.where(r > 0, x2 / safe, 0.0)
    v1 = e1 * field.u_hat[0] + e2 * field.u_hat[1]
    v2 = e2 * field.u_hat[0] - e1 * field.u_hat[1]
    vt1 = e1 * field.ut_hat[0] + e2 * field.ut_hat[1]
    vt2 = e2 * field.ut_hat[0] - e1 * field.ut_hat[1]
    lb = 1j * params.b * r
    la = 1j * params.a * r
    w = np.stack([vt1 + lb * v1, vt2 + la * v2, vt1 - lb * v1, vt2 - la * v2])
    return w, (r, e1, e2)


def _w_to_lattice(params: SystemParams, w, geom, n: int, L: float) -> SpectralField2D:
    r, e1, e2 = geom
    vt1 = 0.5 * (w[0] + w[2])
    vt2 = 0.5 * (w[1] + w[3])
    safe = np.where(r > 0, r, 1.0)
    v1 = np.where(r > 0, (w[0] - w[2]) / (2j * params.b * safe), 0.0)
    v2 = np.where(r > 0, (w[1] - w[3]) / (2j * params.a * safe), 0.0)
    u1 = e1 * v1 + e2 * v2
    u2 = e2 * v1 - e1 * v2
    ut1 = e1 * vt1 + e2 * vt2
    ut2 = e2 * vt1 - e1 * vt2
    return SpectralField2D(n=n, L=L, u_hat=np.stack([u1, u2]),
                           ut_hat=np.stack([ut1, ut2]))


def solve_linear_lattice(params: SystemParams, field: SpectralField2D, times,
                         s_values=(0.0, 1.0), want_sup: bool = True,
                         keep_fields: bool = False):
    """Evolve lattice data exactly to each output time and tabulate norms.

    Per frequency the data is converted to W, propagated by the block
    exponential, and converted back; the zero mode follows dc_evolve.
    Emits H^s norms of u and u_t and, optionally, sup norms of |D|u and u_t.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be nonnegative and ascending")
    n, L = field.n, field.L
    w0, geom = _lattice_to_w(params, field)
    r = geom[0]
    dc0 = field.u_hat[:, 0, 0].copy(), field.ut_hat[:, 0, 0].copy()

    cols: dict[str, np.ndarray] = {}
    for s in s_values:
        cols[f"u_Hs{s:g}_L2"] = np.empty(times.size)
        cols[f"ut_Hs{s:g}_L2"] = np.empty(times.size)
    if want_sup:
        cols["Du_Linf"] = np.empty(times.size)
        cols["ut_Linf"] = np.empty(times.size)
        cols["Du_ut_Linf"] = np.empty(times.size)
    kept = [] if keep_fields else None

    for i, t in enumerate(times):
        wt = apply_w_blocks(params, r, float(t), w0)
        ft = _w_to_lattice(params, wt, geom, n, L)
        u_dc, ut_dc = dc_evolve(dc0[0], dc0[1], float(t))
        ft.u_hat[:, 0, 0] = u_dc
        ft.ut_hat[:, 0, 0] = ut_dc
        for s in s_values:
            cols[f"u_Hs{s:g}_L2"][i] = hs_norm_lattice(ft.u_hat, n, L, s)
            cols[f"ut_Hs{s:g}_L2"][i] = hs_norm_lattice(ft.ut_hat, n, L, s)
        if want_sup:
            du = ft.u_hat * r[None, :, :]
            sup_du = sup_norm_lattice(du, n, L)
            sup_ut = sup_norm_lattice(ft.ut_hat, n, L)
            cols["Du_Linf"][i] = sup_du
            cols["ut_Linf"][i] = sup_ut
            cols["Du_ut_Linf"][i] = max(sup_du, sup_ut)
        if keep_fields:
            kept.append(ft)
    table = {"t": times}
    table.update(cols)
    return table, kept


# ---------------------------------------------------------------------------
# decay fitting


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponent of log(norm) against log(1 + t)."""

    window: tuple[float, float]
    slope: float
    r2: float
    samples: int


def fit_decay(times, norms, window) -> DecayFit:
    """Fit a power-law decay exponent inside the given time window.

    Requires at least 8 samples in the window and strictly positive norms
    (a nonpositive norm signals underflow or an empty field).
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    mask = (times >= lo) & (times <= hi)
    if int(mask.sum()) < 8:
        raise ValueError("need at least 8 samples in window [%g, %g], got %d"
                         % (lo, hi, int(mask.sum())))
    y = norms[mask]
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("norms must be positive and finite inside the window")
    x = np.log1p(times[mask])
    ly = np.log(y)
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(window=(lo, hi), slope=float(slope), r2=r2, samples=int(mask.sum()))
