"""Fourier-space solvers and decay-rate certification for elastic waves with
Kelvin-Voigt damping in 2D and 3D.

The package provides the exact per-frequency propagator of the damped
system, its branch-labeled spectrum and eigenprojections, asymptotic
profiles with certified remainders, radial and FFT-lattice realizations of
the linear flow, an exponential integrator for the weakly coupled
semilinear system, the balanced-exponent existence gates in 2D and 3D, and
a CLI experiment runner (``ewkv``) that emits CSV tables, JSON reports and
pass/fail certificates.
"""

from .core import (SystemParams, FrequencyPoint, SystemMatrices, make_params,
                   freq_from_xi, freq_from_r, assemble_matrices,
                   to_first_order, from_first_order, dc_evolve)
from .spectra import (ModeDecomposition, ExpansionResult,
                      DegenerateSpectrumError, rho, char_poly_coeffs,
                      eigenvalues, eigenvalues_grid, decompose,
                      eigenprojection, expand_small, expand_large,
                      dissipativity_scan, c_best)
from .propagator import (propagate, propagator_matrix, s0_profile,
                         s_inf_profile, remainder_certify)
from .grid2d import (RadialProfile, SpectralField2D, DecayFit, make_data,
                     radial_grid, w_profile, w_profile_from_data,
                     norm_suite, solve_linear_radial, solve_linear_lattice,
                     fit_decay)
from .profiles import (ZoneCutoffs, ProfileReport, MomentError, make_cutoffs,
                       profile_remainder_norm, weighted_l1_norm, moment_check,
                       refinement_experiment, weighted_profile_experiment)
from .semilinear2d import (ExponentReport, BlowUpError, p_bal, exponent_gate,
                           gate_search, solve_semilinear,
                           decay_with_loss_check)
from .helmholtz3d import (HelmholtzParts, ExponentReport3D, helmholtz_split,
                          solve_decoupled, verify_decoupling, decay_3d_linear,
                          p_bal_3d, exponent_gate_3d)

__version__ = "0.1.0"
