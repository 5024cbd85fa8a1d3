"""Beta-harmonic functions on regular trees and their Dirichlet-to-Neumann maps."""
from .data import (BoundaryDatum, CallableDatum, CharacteristicIndicator, PiecewisePolynomial,
                   Polynomial, chi, parse_datum)
from .dirichlet import (BetaParam, GrowthWitness, RecursionTrace, Solution, boundary_trace,
                        comparison_check, counterexample_beta0, growth_witness, harmonic_residual,
                        solve, solve_characteristic, strong_comparison_check)
from .dtn import (DtnEstimate, KernelProfile, NormalVector, gamma_estimate, gamma_kernel_quadrature,
                  gradient, kernel_Kj, kernel_limit, lambda_closed_form, lambda_estimate, omega, varpi)
from .errors import (DomainError, HypothesisError, InvariantError, NoBoundedSolutionError,
                     SingularPointError, ToleranceNotMetError, TreeDtnError,
                     UnsupportedOperationError)
from .levels import certify_harmonic
from .tree import (Branch, MadicInterval, TreeConfig, Vertex, ancestor, big_n, branch_of_point,
                   interval, n_of, psi, successors)
from .walk import WalkConfig, estimate_u, walk_step

__version__ = "0.1.0"
