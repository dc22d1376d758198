"""The moment-constrained projection problem.

The feasible set is every signed measure ``Q`` on the atoms of ``P`` with
``Q(X) = 1`` and ``sum_j g_i(x_j) Q(x_j) = 0`` for each constraint column
``i``. Constraints are pre-centered: a raw statistic ``f_i`` with target
``m_i`` enters as ``g_i = f_i - m_i``.
"""
from dataclasses import dataclass

import numpy as np

from .family import DivergenceFamily
from .measures import DiscreteSignedMeasure, ProbabilityMeasure

__all__ = [
    "MomentProblem",
    "RankDeficient",
    "DimensionMismatch",
    "build_problem",
    "feasibility_residual",
    "density_residual",
    "RANK_RTOL",
]

RANK_RTOL = 1e-10


class DimensionMismatch(ValueError):
    pass


class RankDeficient(ValueError):
    """The constraint functions are linearly dependent on ``supp P``.

    ``kernel`` holds a nonzero ``lambda`` (length ``1 + l``) with
    ``lambda @ [1, g(x_j)] == 0`` for every atom, up to the rank threshold.
    """

    def __init__(self, message, kernel):
        super().__init__(message)
        self.kernel = np.asarray(kernel)


@dataclass(frozen=True, eq=False)
class MomentProblem:
    P: ProbabilityMeasure
    G: np.ndarray
    family: DivergenceFamily
    column_names: tuple = ()

    @property
    def n(self):
        return self.G.shape[0]

    @property
    def l(self):
        return self.G.shape[1]

    @property
    def G1(self):
        """``[1 | G]``: the implicit mass constraint prepended."""
        return np.hstack([np.ones((self.n, 1)), self.G])

    @property
    def weights(self):
        return self.P.weights

    def constraint_matrix(self):
        """``A`` with ``A @ q`` giving the constraint integrals of density ``q``."""
        return (self.G1 * self.weights[:, None]).T

    @property
    def targets(self):
        e0 = np.zeros(1 + self.l)
        e0[0] = 1.0
        return e0


def _rank_check(P, G, rtol):
    G1 = np.hstack([np.ones((G.shape[0], 1)), G])
    A = G1 * np.sqrt(P.weights)[:, None]
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    k = G1.shape[1]
    if s.size < k:
        # more columns than atoms
        raise RankDeficient(
            f"{k} constraint functions (mass included) on only {s.size} atoms",
            vt[-1],
        )
    if s[-1] <= rtol * s[0]:
        raise RankDeficient(
            f"constraints are linearly dependent on supp P "
            f"(smallest singular value {s[-1]:.3g}, largest {s[0]:.3g})",
            vt[-1],
        )


def build_problem(P, G, family, column_names=(), rank_rtol=RANK_RTOL, check_rank=True):
    """Validate and assemble a :class:`MomentProblem`.

    ``G`` is ``n x l`` with ``G[j, i] = g_i(x_j)`` aligned to ``P.atoms``; a
    1-d array is read as one column and ``None`` as no constraint beyond
    mass. ``check_rank=False`` skips the independence check, which is only
    useful for studying degenerate instances.
    """
    if not isinstance(P, ProbabilityMeasure):
        raise TypeError("P must be a ProbabilityMeasure")
    if not isinstance(family, DivergenceFamily):
        raise TypeError("family must be a DivergenceFamily")
    n = len(P)
    if G is None:
        G = np.zeros((n, 0))
    G = np.array(G, dtype=float)
    if G.ndim == 1:
        G = G.reshape(-1, 1)
    if G.ndim != 2 or G.shape[0] != n:
        raise DimensionMismatch(f"G has shape {G.shape}, expected ({n}, l)")
    if not np.all(np.isfinite(G)):
        raise ValueError("G must be finite")
    column_names = tuple(column_names)
    if column_names and len(column_names) != G.shape[1]:
        raise DimensionMismatch(f"{len(column_names)} names for {G.shape[1]} columns")
    if check_rank:
        _rank_check(P, G, rank_rtol)
    G.setflags(write=False)
    return MomentProblem(P, G, family, column_names)


def density_residual(problem, q):
    """Constraint residual of the measure ``q dP`` given its density."""
    r = problem.constraint_matrix() @ np.asarray(q, dtype=float)
    r[0] -= 1.0
    return r


def feasibility_residual(problem, Q):
    """Residual ``(Q(X) - 1, sum_j g_i(x_j) Q(x_j), ...)`` of a candidate.

    ``Q`` is a :class:`DiscreteSignedMeasure` on ``supp P`` or a weight vector
    already aligned with ``P.atoms``.
    """
    if isinstance(Q, DiscreteSignedMeasure):
        extra = set(Q.atoms) - set(problem.P.atoms)
        if any(Q.weight_of(a) != 0.0 for a in extra):
            raise ValueError("candidate has mass outside supp P")
        w = Q.aligned_to(problem.P.atoms)
    else:
        w = np.asarray(Q, dtype=float)
        if w.shape != (problem.n,):
            raise DimensionMismatch(f"expected {problem.n} weights, got {w.shape}")
    r = problem.G1.T @ w
    r[0] -= 1.0
    return r
