"""Approximate D-optimal designs on compact semialgebraic sets.

Step one maximizes ``log det M_d(y)`` over a moment relaxation of the
design space; step two recovers atoms and weights of a representing
measure by a rank test and flat-extension extraction, or from the
Christoffel polynomial of the optimal moments.
"""
from .algebra import MonomialBasis, Polynomial, enumerate_basis
from .christoffel import christoffel_eval, christoffel_polynomial, dual_polynomial, levelset_samples, orthonormal_family
from .design import Design
from .io import ProblemFile, RecoveryOptions, builtin_problem, load_problem, parse_problem
from .moments import (MomentSequence, localizing_matrix, moment_matrix, moments_of_atoms, riesz,
                      sample_interior_moments)
from .pipeline import recover_report, solve_problem
from .recovery import (christoffel_recover, compute_weights, extract_atoms, flatness, nie_recover,
                       numeric_rank, verify_design)
from .relaxation import build_design_sdp, build_nie_sdp
from .semialg import SemiAlgebraicSet, interval_set, polygon_set, sphere_set
from .solver import SolverOptions, Status, check_kkt, solve

__version__ = "0.1.0"
