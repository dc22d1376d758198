"""Divergence projections of discrete measures onto moment constraints.

The projection of a reference probability ``P`` onto signed measures of
total mass one with prescribed moments is computed through the
finite-dimensional Fenchel dual, then recovered, checked and diagnosed.
"""
from .family import (DivergenceFamily, DomainBoundaryError, DomainMode, chi2, chi2_m,
                     chi2_plus, hellinger, kl, kl_m, legendre_numeric, make_family)
from .measures import (DiscreteSignedMeasure, ProbabilityMeasure, density, divergence,
                       divergence_extended, jordan_split)
from .problem import (DimensionMismatch, MomentProblem, RankDeficient, build_problem,
                      feasibility_residual)
from .dual import (DualSolution, ProjectionReport, SolverOptions, Status, dual_gradient,
                   dual_hessian, dual_objective, dual_representation, duality_gap,
                   recover_primal, solve_dual)
from .oracle import InfeasibleAffineSystem, oracle_solve, parametrize_feasible
from .diagnostics import (CQStatus, characterization_residual, cq_check, existence_report,
                          support_check)
from .kernels import BACKEND

__version__ = "0.1.0"
