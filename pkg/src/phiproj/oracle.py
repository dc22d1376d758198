"""Brute-force primal minimizer for small instances.

Feasible densities form the affine set ``{q : A q = e0}``; it is written as
``base + basis @ c`` and the divergence is minimized over a dense grid of
coefficients ``c``, then refined coordinate by coordinate and by a simplex search. This never looks
at the dual, which is the point: it checks the dual solver.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .family import golden_section
from .problem import density_residual

__all__ = [
    "InfeasibleAffineSystem",
    "FeasibleParametrization",
    "OracleResult",
    "BoxTouchWarning",
    "parametrize_feasible",
    "oracle_solve",
]

MAX_ORACLE_DIM = 3
_GRID_CHUNK = 1 << 18


class InfeasibleAffineSystem(ValueError):
    """No density satisfies the mass and moment equations."""


class BoxTouchWarning(UserWarning):
    """The grid minimizer sits on the coefficient box boundary."""


@dataclass(frozen=True)
class FeasibleParametrization:
    base_point: np.ndarray
    basis: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[1]

    def density(self, coeffs):
        return self.base_point + self.basis @ np.asarray(coeffs, dtype=float)


@dataclass(frozen=True)
class OracleResult:
    value: float
    q: np.ndarray
    coeffs: np.ndarray = None
    touches_box: bool = False
    history: list = field(default_factory=list)

    def __iter__(self):
        # allows ``value, q = oracle_solve(...)``
        return iter((self.value, self.q))


def parametrize_feasible(problem, rtol=1e-10, atol=1e-10):
    """Base point and null-space basis of the feasible densities.

    The base point is the ``P``-weighted minimum-norm solution, which is
    also the chi-square projection of ``P``. The basis is orthonormal.
    """
    w = problem.weights
    sw = np.sqrt(w)
    A = problem.constraint_matrix()
    e0 = problem.targets
    u, *_ = np.linalg.lstsq(A / sw[None, :], e0, rcond=None)
    base = u / sw
    res = float(np.max(np.abs(density_residual(problem, base))))
    if res > atol:
        raise InfeasibleAffineSystem(
            f"mass and moment equations are inconsistent (residual {res:.3g})"
        )
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > rtol * s[0])) if s.size else 0
    basis = vt[rank:].T.copy()
    base.setflags(write=False)
    basis.setflags(write=False)
    return FeasibleParametrization(base, basis)


def _objective(problem, par):
    fam = problem.family
    w = problem.weights

    def f(coeffs):
        return kernels.grid_objective(fam._kind, fam.gamma, w, par.base_point, par.basis, coeffs)

    return f


def _grid_search(f, dim, axis, chunk=_GRID_CHUNK):
    res = axis.size
    total = res ** dim
    best_val, best_idx = math.inf, None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        coeffs = np.stack([axis[i] for i in np.unravel_index(idx, (res,) * dim)], axis=1)
        vals = f(coeffs)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_idx = float(vals[k]), idx[k]
    if best_idx is None:
        return math.inf, None
    pos = np.unravel_index(best_idx, (res,) * dim)
    return best_val, np.array([axis[i] for i in pos])


def oracle_solve(problem, resolution=401, radius=10.0, max_passes=200, pass_tol=1e-15):
    """Minimize the divergence over feasible densities by grid search.

    Parameters
    ----------
    resolution : int
        Grid points per null-space axis.
    radius : float
        Half-width of the coefficient box ``[-radius, radius]**dim``.

    Returns
    -------
    OracleResult
        Unpacks as ``(value, q)``; ``value`` is ``+inf`` and ``q`` is None
        when no grid point lies in the divergence domain.
    """
    par = parametrize_feasible(problem)
    dim = par.dim
    if dim > MAX_ORACLE_DIM:
        raise ValueError(f"null-space dimension {dim} exceeds {MAX_ORACLE_DIM}")
    f = _objective(problem, par)
    if dim == 0:
        v = float(f(np.zeros((1, 0)))[0])
        return OracleResult(v, par.base_point.copy(), np.zeros(0))

    axis = np.linspace(-radius, radius, int(resolution))
    value, c = _grid_search(f, dim, axis)
    if c is None:
        return OracleResult(math.inf, None)
    touches = bool(np.any(np.abs(c) >= radius))
    if touches:
        warnings.warn(
            "oracle minimizer touches the coefficient box; the projection may "
            "not exist or may lie outside it",
            BoxTouchWarning,
            stacklevel=2,
        )

    def along(i, c):
        def g(s):
            trial = c.copy()
            trial[i] = s
            return float(f(trial[None, :])[0])
        return g

    width = np.full(dim, axis[1] - axis[0])
    history = [value]
    for _ in range(max_passes):
        start = value
        for i in range(dim):
            lo, hi = c[i] - width[i], c[i] + width[i]
            s, v = golden_section(along(i, c), lo, hi)
            if v < value:
                c[i], value = s, v
                if min(s - lo, hi - s) < 1e-3 * width[i]:
                    width[i] *= 2.0
        history.append(value)
        if start - value <= pass_tol * (1.0 + abs(value)):
            break
    # coordinate moves stall where the minimizer sits on a face of the domain
    # (zero atoms); a simplex search moves along such faces
    res = optimize.minimize(lambda z: float(f(z[None, :])[0]), c, method="Nelder-Mead",
                            options={"initial_simplex": c + np.vstack([np.zeros(dim), np.diag(width)]),
                                     "xatol": 1e-13, "fatol": 1e-17, "maxiter": 4000 * dim})
    if res.fun < value:
        c, value = np.asarray(res.x, dtype=float), float(res.fun)
        history.append(value)
    return OracleResult(value, par.density(c), c, touches, history)
