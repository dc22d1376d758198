"""Lagrangian dual of the moment-constrained projection and primal recovery.

The dual objective is

    D(lam) = lam[0] - sum_j P_j * phi*(lam @ [1, g(x_j)])

which is concave; its gradient is minus the constraint residual of the
density ``phi*'(lam @ [1, g])``, so a stationary point recovers a feasible
projection. ``solve_dual`` maximizes it with a damped Newton method, keeping
every ``lam @ [1, g(x_j)]`` strictly inside the conjugate domain.
"""
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .measures import DiscreteSignedMeasure, density, divergence
from .problem import density_residual, feasibility_residual

log = logging.getLogger(__name__)

__all__ = [
    "SolverOptions",
    "Status",
    "DualSolution",
    "ProjectionReport",
    "NotConverged",
    "InfeasibleCandidate",
    "dual_objective",
    "dual_gradient",
    "dual_hessian",
    "solve_dual",
    "recover_primal",
    "duality_gap",
    "dual_representation",
]


class Status(str, enum.Enum):
    CONVERGED = "converged"
    BOUNDARY = "boundary"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


class NotConverged(RuntimeError):
    pass


class InfeasibleCandidate(ValueError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 200
    armijo: float = 1e-4
    boundary_fraction: float = 0.99
    max_damping_attempts: int = 10
    max_backtracks: int = 60
    objective_limit: float = 1e12
    lambda_limit: float = 1e8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.boundary_fraction < 1.0:
            raise ValueError("boundary_fraction must lie in (0, 1)")
        if not 0.0 < self.armijo < 0.5:
            raise ValueError("armijo constant must lie in (0, 0.5)")
        if self.max_damping_attempts < 1 or self.max_backtracks < 1:
            raise ValueError("attempt counts must be positive")


@dataclass(frozen=True)
class DualSolution:
    lam: np.ndarray
    dual_value: float
    status: Status
    grad_norm: float
    iterations: int
    message: str = ""

    @property
    def converged(self):
        return self.status is Status.CONVERGED


@dataclass(frozen=True)
class ProjectionReport:
    q_star: np.ndarray
    primal_value: float
    dual_value: float
    gap: float
    characterization_residual: float
    feasibility_residual: float
    status: Status
    lam: np.ndarray = field(repr=False)

    def measure(self, P):
        return DiscreteSignedMeasure.from_density(self.q_star, P)


# -- objective pieces ---------------------------------------------------------


def _linear_args(problem, lam):
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape != (1 + problem.l,):
        raise ValueError(f"lambda must have length {1 + problem.l}, got {lam.shape}")
    return lam, problem.G1 @ lam


def _weighted_conj_sum(weights, f):
    if np.any(np.isinf(f)):
        return math.inf
    return math.fsum(weights * f)


def dual_objective(problem, lam):
    """``lam_0 - sum_j P_j phi*(lam @ [1, g(x_j)])``; ``-inf`` off the domain."""
    lam, t = _linear_args(problem, lam)
    f, _, _ = problem.family.conj_all(t)
    s = _weighted_conj_sum(problem.weights, f)
    return -math.inf if s == math.inf else lam[0] - s


def _require_interior(problem, t):
    if not np.all(problem.family.in_conj_interior(t)):
        from .family import DomainBoundaryError

        raise DomainBoundaryError("lambda @ g leaves the open conjugate domain")


def dual_gradient(problem, lam):
    lam, t = _linear_args(problem, lam)
    _require_interior(problem, t)
    _, f1, _ = problem.family.conj_all(t)
    return -density_residual(problem, f1)


def dual_hessian(problem, lam):
    lam, t = _linear_args(problem, lam)
    _require_interior(problem, t)
    _, _, f2 = problem.family.conj_all(t)
    G1 = problem.G1
    return -(G1.T * (problem.weights * f2)) @ G1


# -- Newton engine -------------------------------------------------------------


class _Objective:
    """Minimizes ``F(lam) = -c @ lam + sum_j w_j phi*(G1 @ lam)``."""

    def __init__(self, fam, weights, G1, c):
        self.fam = fam
        self.w = weights
        self.G1 = G1
        self.c = c

    def value(self, lam):
        t = self.G1 @ lam
        f, _, _ = self.fam.conj_all(t)
        s = _weighted_conj_sum(self.w, f)
        return math.inf if s == math.inf else s - float(self.c @ lam)

    def derivatives(self, lam):
        t = self.G1 @ lam
        f, f1, f2 = self.fam.conj_all(t)
        value = _weighted_conj_sum(self.w, f) - float(self.c @ lam)
        grad = self.G1.T @ (self.w * f1) - self.c
        hess = (self.G1.T * (self.w * f2)) @ self.G1
        return t, value, grad, hess

    def step_limit(self, t, dt, fraction):
        """Largest step in ``(0, 1]`` keeping ``t + a*dt`` a fraction inside."""
        alpha = 1.0
        a, b = self.fam.a_conj, self.fam.b_conj
        if b < math.inf:
            up = dt > 0
            if np.any(up):
                alpha = min(alpha, fraction * float(np.min((b - t[up]) / dt[up])))
        if a > -math.inf:
            down = dt < 0
            if np.any(down):
                alpha = min(alpha, fraction * float(np.min((a - t[down]) / dt[down])))
        return alpha

    def boundary_distance(self, t):
        d = math.inf
        if self.fam.b_conj < math.inf:
            d = min(d, float(np.min(self.fam.b_conj - t)))
        if self.fam.a_conj > -math.inf:
            d = min(d, float(np.min(t - self.fam.a_conj)))
        return d


def _newton(obj, lam0, opts):
    lam = np.array(lam0, dtype=float)
    dim = lam.size
    last_alpha_max = 1.0
    for it in range(int(opts.max_iter) + 1):
        t, F, grad, H = obj.derivatives(lam)
        gnorm = float(np.max(np.abs(grad))) if dim else 0.0
        if not np.isfinite(F) or not np.all(np.isfinite(grad)):
            return lam, -F, Status.BOUNDARY, gnorm, it, "non-finite objective at iterate"
        if gnorm <= opts.tol:
            return lam, -F, Status.CONVERGED, gnorm, it, ""
        if -F > opts.objective_limit or float(np.linalg.norm(lam)) > opts.lambda_limit:
            return lam, -F, Status.UNBOUNDED, gnorm, it, "dual objective diverges"
        if it == opts.max_iter:
            break

        accepted = False
        scale = max(1.0, float(np.max(np.diag(H)))) if dim else 1.0
        for attempt in range(opts.max_damping_attempts):
            mu = 0.0 if attempt == 0 else 1e-10 * scale * 10.0 ** attempt
            try:
                L = np.linalg.cholesky(H + mu * np.eye(dim))
            except np.linalg.LinAlgError:
                continue
            d = -np.linalg.solve(L.T, np.linalg.solve(L, grad))
            slope = float(grad @ d)
            if not slope < 0:
                continue
            dt = obj.G1 @ d
            alpha = obj.step_limit(t, dt, opts.boundary_fraction)
            last_alpha_max = alpha
            if alpha <= 0:
                continue
            if abs(slope) <= 1e-12 * (1.0 + abs(F)):
                # the predicted decrease is below the rounding of F, so Armijo
                # would only compare noise: judge the full step by the gradient
                trial = lam + alpha * d
                _, F_new, g_new, _ = obj.derivatives(trial)
                if np.isfinite(F_new) and np.max(np.abs(g_new)) < gnorm:
                    accepted = True
                    break
            for _ in range(opts.max_backtracks):
                trial = lam + alpha * d
                F_new = obj.value(trial)
                if F_new <= F + opts.armijo * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
            if accepted:
                break
        if not accepted:
            if obj.boundary_distance(t) <= 1e-8 or last_alpha_max < 1e-12:
                return lam, -F, Status.BOUNDARY, gnorm, it, "steps collapse against the conjugate domain boundary"
            return lam, -F, Status.ITERATION_LIMIT, gnorm, it, "line search failed away from the boundary"
        lam = trial
        log.debug("iter %d  F=%.17g  |grad|=%.3g  alpha=%.3g", it, F, gnorm, alpha)
    return lam, -F, Status.ITERATION_LIMIT, gnorm, int(opts.max_iter), "iteration limit reached"


def _run(obj, dim, options):
    opts = options if options is not None else SolverOptions()
    lam, value, status, gnorm, iters, msg = _newton(obj, np.zeros(dim), opts)
    return DualSolution(lam, float(value), status, float(gnorm), int(iters), msg)


def solve_dual(problem, options=None):
    """Maximize the dual objective from ``lam = 0``.

    Outcomes are reported through :attr:`DualSolution.status`; nothing is
    raised for boundary, unbounded or stalled runs.
    """
    obj = _Objective(problem.family, problem.weights, problem.G1, problem.targets)
    return _run(obj, 1 + problem.l, options)


def recover_primal(problem, solution):
    """Primal projection ``q* = phi*'(lam @ [1, g])`` from a converged dual."""
    from .diagnostics import characterization_residual

    if solution.status is not Status.CONVERGED:
        raise NotConverged(
            f"dual status is {solution.status.value}; no primal projection is recovered"
        )
    lam, t = _linear_args(problem, solution.lam)
    _, q, _ = problem.family.conj_all(t)
    q = np.asarray(q, dtype=float)
    primal = divergence(problem.family, DiscreteSignedMeasure.from_density(q, problem.P), problem.P)
    dual = dual_objective(problem, lam)
    gap = primal - dual
    support = q > 0 if not problem.family.full_line else np.ones(q.size, bool)
    char = characterization_residual(problem, q, support=support)
    feas = float(np.max(np.abs(density_residual(problem, q))))
    q.setflags(write=False)
    return ProjectionReport(q, primal, dual, gap, char, feas, solution.status, lam)


def duality_gap(problem, lam, Q, tol=1e-8):
    """``divergence(Q, P) - dual_objective(lam)`` for a feasible ``Q``."""
    r = feasibility_residual(problem, Q)
    if np.max(np.abs(r)) > tol:
        raise InfeasibleCandidate(f"candidate violates constraints by {np.max(np.abs(r)):.3g}")
    if not isinstance(Q, DiscreteSignedMeasure):
        Q = DiscreteSignedMeasure(Q, atoms=problem.P.atoms)
    return divergence(problem.family, Q, problem.P) - dual_objective(problem, lam)


def dual_representation(fam, Q, P, G, options=None):
    """Variational value ``sup_lam {Q(lam @ g) - P(phi*(lam @ g))}``.

    The supremum runs over the span of ``1`` and the columns of ``G``. It
    reaches ``divergence(fam, Q, P)`` when ``phi'(dQ/dP)`` lies in that span,
    and the maximizer then holds the span coefficients.
    """
    q, pos, neg = density(Q, P)
    if pos or neg:
        raise ValueError("Q must be absolutely continuous with respect to P")
    if not math.isfinite(divergence(fam, Q, P)):
        raise ValueError("Q must have finite divergence from P")
    G = np.zeros((len(P), 0)) if G is None else np.asarray(G, dtype=float).reshape(len(P), -1)
    G1 = np.hstack([np.ones((len(P), 1)), G])
    c = G1.T @ (q * P.weights)
    obj = _Objective(fam, P.weights, G1, c)
    return _run(obj, G1.shape[1], options)
