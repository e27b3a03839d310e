"""Exact spectrum of Phi(r): labeled eigenvalues, eigenprojections, expansions.

The characteristic quartic splits into one quadratic per wave speed,

    lambda^2 + c^2 r^2 (lambda + 1) = 0,   c in {a, b},

so every eigenvalue belongs to a speed family and the families never cross.
Each family has a conjugate complex pair below its double-root radius
r = 2/c and two real roots above it (one tending to -1, one to -c^2 r^2).
Branch labels follow the small-frequency expansion below the collisions and
the large-frequency expansion above both of them:

    r small:  1 = b(+), 2 = b(-), 3 = a(+), 4 = a(-)
    in between (b real, a complex):  1 = b(big), 2 = b(small), 3 = a(+), 4 = a(-)
    r large:  1 = b(big), 2 = a(big), 3 = b(small), 4 = a(small)

Each labeled branch is continuous in r except exactly at the family
collisions, where the spectrum is degenerate and labels may reshuffle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SystemParams

__all__ = [
    "ModeDecomposition",
    "ExpansionResult",
    "DegenerateSpectrumError",
    "EPS_ZONE",
    "rho",
    "char_poly_coeffs",
    "family_roots",
    "eigenvalues",
    "eigenvalues_grid",
    "decompose",
    "eigenprojection",
    "expand_small",
    "expand_large",
    "dissipativity_scan",
    "default_scan_grid",
    "c_best",
]

# Zone boundary for classifying small/large asymptotic regimes in tests.
EPS_ZONE = 0.1

# Degeneracy threshold factor; the flag compares within-family gaps against
# gap_tol = 1e-6 * (1 + spectral radius).  Within-family gaps are the only
# ones entering projection denominators, since the families live on
# complementary 2x2 blocks of Phi.
GAP_TOL_FACTOR = 1e-6


class DegenerateSpectrumError(ValueError):
    """Raised when eigenprojections are requested at a (near-)double root.

    Callers should switch to the dense matrix exponential, which has no
    degeneracy failure mode.
    """


@dataclass(frozen=True)
class ModeDecomposition:
    """Branch-labeled eigenvalues and eigenprojections of Phi(r).

    ``lambdas[j]`` is branch j+1; ``projections`` is None when the spectrum
    is degenerate (within-family gap below threshold).  ``families`` maps
    each branch to its wave speed, 'b' or 'a'.
    """

    r: float
    lambdas: np.ndarray
    families: tuple[str, str, str, str]
    degenerate: bool
    projections: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None


@dataclass(frozen=True)
class ExpansionResult:
    """Truncated eigenvalue expansion at one frequency."""

    r: float
    approx_lambdas: np.ndarray
    regime: str  # "small" | "large"
    order: int


def rho(r):
    """Dissipative-structure function r^2 / (1 + r^2)."""
    r = np.asarray(r, dtype=float)
    out = r ** 2 / (1.0 + r ** 2)
    return float(out) if out.ndim == 0 else out


def char_poly_coeffs(params: SystemParams, r: float) -> np.ndarray:
    """Monic quartic coefficients of det(lambda I - Phi(r)), descending order."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    a2, b2 = params.a ** 2, params.b ** 2
    r2 = r * r
    r4 = r2 * r2
    return np.array(
        [1.0, (a2 + b2) * r2, (a2 + b2) * r2 + a2 * b2 * r4, 2 * a2 * b2 * r4, a2 * b2 * r4]
    )


def family_roots(c: float, r):
    """Stable roots (plus, minus) of lambda^2 + c^2 r^2 (lambda + 1) = 0.

    Vectorized over r.  Below the double root (c r < 2) the pair is complex
    conjugate and "plus" is the root with positive imaginary part; above it
    both roots are real and "plus" is the larger one (tending to -1), computed
    from the product of roots to avoid cancellation.
    """
    r = np.asarray(r, dtype=float)
    s = c * c * r * r                      # = -sum of roots = product of roots
    mu = -0.5 * s
    disc = mu * mu - s                     # (gap/2)^2
    plus = np.empty(r.shape, dtype=complex)
    minus = np.empty(r.shape, dtype=complex)

    osc = disc < 0
    delta_im = np.sqrt(-disc, where=osc, out=np.zeros_like(mu))
    plus[osc] = mu[osc] + 1j * delta_im[osc]
    minus[osc] = mu[osc] - 1j * delta_im[osc]

    ovd = ~osc
    delta_re = np.sqrt(disc, where=ovd, out=np.zeros_like(mu))
    lam_minus = mu[ovd] - delta_re[ovd]
    # product of roots equals s; guards the r = 0 quadruple zero
    lam_plus = np.divide(s[ovd], lam_minus, out=np.zeros_like(lam_minus),
                         where=lam_minus != 0)
    plus[ovd] = lam_plus
    minus[ovd] = lam_minus

    if plus.ndim == 0:
        return complex(plus), complex(minus)
    return plus, minus


def _labeled_roots(params: SystemParams, r):
    """Eigenvalues ordered by branch label, vectorized over r.

    Returns (lams, fams): lams has shape (4,) + r.shape, fams is the label ->
    family map as an int array (0 = b, 1 = a) of the same shape.
    """
    r = np.asarray(r, dtype=float)
    bp, bm = family_roots(params.b, r)
    ap, am = family_roots(params.a, r)
    bp, bm, ap, am = np.broadcast_arrays(bp, bm, ap, am)

    lams = np.empty((4,) + np.shape(bp), dtype=complex)
    fams = np.zeros((4,) + np.shape(bp), dtype=np.int8)
    fams[0] = 0
    # Defaults cover the small and window regimes, where (1,2) is the
    # b-family in either (+,-) or (big, small) order and (3,4) is a(+,-).
    lams[0], lams[1], lams[2], lams[3] = bp, bm, ap, am
    fams[1], fams[2], fams[3] = 0, 1, 1
    # Past the a-family collision both families are real and the labels
    # switch to the large-frequency convention (1,2) = big, (3,4) = small.
    large = params.a * r >= 2.0
    if np.any(large):
        lams[1] = np.where(large, ap, lams[1])
        lams[2] = np.where(large, bm, lams[2])
        fams[1] = np.where(large, 1, fams[1])
        fams[2] = np.where(large, 0, fams[2])
    return lams, fams


def eigenvalues(params: SystemParams, r: float) -> np.ndarray:
    """Branch-labeled eigenvalues of Phi(r) at a single frequency r > 0."""
    if r <= 0:
        raise ValueError("r must be positive")
    lams, _ = _labeled_roots(params, float(r))
    return lams.copy()


def eigenvalues_grid(params: SystemParams, r_grid) -> np.ndarray:
    """Branch-labeled eigenvalues on a whole frequency grid, shape (4, n)."""
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid <= 0):
        raise ValueError("all frequencies must be positive")
    lams, _ = _labeled_roots(params, r_grid)
    return lams


def _phi_blocks(params: SystemParams, r: float):
    """The two 2x2 blocks of Phi(r), index pairs (0, 2) and (1, 3)."""
    out = []
    for c in (params.b, params.a):
        h = 0.5 * c * c * r * r
        out.append(np.array([[-h + 1j * c * r, -h], [-h, -h - 1j * c * r]]))
    return out  # [block_b, block_a]


def decompose(params: SystemParams, r: float) -> ModeDecomposition:
    """Eigenvalues plus eigenprojections of Phi(r), with a degeneracy flag.

    The projections realize the product formula prod_{k != j}
    (Phi - lambda_k) / (lambda_j - lambda_k); cross-family factors act as the
    identity on each family's block, so the product reduces to one 2x2
    projector per family, which is the numerically stable evaluation order.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    lams, fams = _labeled_roots(params, float(r))
    lams = lams.copy()
    fams = tuple("ba"[int(f)] for f in fams)

    radius = float(np.max(np.abs(lams)))
    gap_tol = GAP_TOL_FACTOR * (1.0 + radius)
    b_idx = [j for j in range(4) if fams[j] == "b"]
    a_idx = [j for j in range(4) if fams[j] == "a"]
    gap_b = abs(lams[b_idx[0]] - lams[b_idx[1]])
    gap_a = abs(lams[a_idx[0]] - lams[a_idx[1]])
    degenerate = bool(min(gap_b, gap_a) < gap_tol)

    projections = None
    if not degenerate:
        block_b, block_a = _phi_blocks(params, float(r))
        projections = [None] * 4
        for (idx, block, rows) in ((b_idx, block_b, (0, 2)), (a_idx, block_a, (1, 3))):
            j, k = idx
            pj = (block - lams[k] * np.eye(2)) / (lams[j] - lams[k])
            pk = (block - lams[j] * np.eye(2)) / (lams[k] - lams[j])
            for label, p2 in ((j, pj), (k, pk)):
                P = np.zeros((4, 4), dtype=complex)
                P[np.ix_(rows, rows)] = p2
                projections[label] = P
        projections = tuple(projections)

    return ModeDecomposition(r=float(r), lambdas=lams, families=fams,
                             degenerate=degenerate, projections=projections)


def eigenprojection(params: SystemParams, r: float, j: int) -> np.ndarray:
    """Eigenprojection P_j(r) for branch j in {1, 2, 3, 4}."""
    if j not in (1, 2, 3, 4):
        raise ValueError("branch label must be in 1..4, got %r" % j)
    dec = decompose(params, r)
    if dec.degenerate:
        raise DegenerateSpectrumError(
            "spectrum at r=%g is degenerate; the product formula is "
            "ill-conditioned there, use the dense matrix exponential" % r)
    return dec.projections[j - 1].copy()


def expand_small(params: SystemParams, r: float, order: int = 2) -> ExpansionResult:
    """Truncated small-frequency expansion, lambda ~ +-i c r - (c^2/2) r^2."""
    if r <= 0:
        raise ValueError("r must be positive")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    a, b = params.a, params.b
    first = np.array([1j * b, -1j * b, 1j * a, -1j * a]) * r
    lam = first.astype(complex)
    if order >= 2:
        lam = lam - 0.5 * np.array([b * b, b * b, a * a, a * a]) * r * r
    return ExpansionResult(r=float(r), approx_lambdas=lam, regime="small", order=order)


def expand_large(params: SystemParams, r: float) -> ExpansionResult:
    """Truncated large-frequency expansion of the four branches."""
    if r <= 0:
        raise ValueError("r must be positive")
    a2, b2 = params.a ** 2, params.b ** 2
    r2 = r * r
    lam = np.array(
        [
            -1.0 - 1.0 / (b2 * r2),
            -1.0 - 1.0 / (a2 * r2),
            -b2 * r2 + 1.0 + 1.0 / (b2 * r2),
            -a2 * r2 + 1.0 + 1.0 / (a2 * r2),
        ],
        dtype=complex,
    )
    return ExpansionResult(r=float(r), approx_lambdas=lam, regime="large", order=2)


def default_scan_grid(n: int = 200) -> np.ndarray:
    """Log-spaced frequency grid used for dissipativity scans."""
    return np.geomspace(1e-3, 1e3, n)


def dissipativity_scan(params: SystemParams, r_grid) -> tuple[float, float]:
    """Best constant c with max_j Re lambda_j(r) <= -c rho(r) on the grid.

    Returns (c_best, worst_r) where worst_r attains the infimum.  A
    nonpositive c_best contradicts the dissipative structure and raises.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or r_grid.size == 0 or np.any(r_grid <= 0):
        raise ValueError("r_grid must be a nonempty 1-d array of positive frequencies")
    lams, _ = _labeled_roots(params, r_grid)
    worst_re = np.max(lams.real, axis=0)
    ratio = -worst_re / rho(r_grid)
    i = int(np.argmin(ratio))
    c = float(ratio[i])
    if c <= 0:
        raise RuntimeError("dissipativity violated: max Re lambda >= 0 at r=%g"
                           % r_grid[i])
    return c, float(r_grid[i])


def c_best(params: SystemParams) -> float:
    """c from dissipativity_scan on the default grid."""
    return dissipativity_scan(params, default_scan_grid())[0]
