"""Power divergence functions, their derivatives and Fenchel conjugates.

The family is

    phi_g(x) = (x**g - g*x + g - 1) / (g*(g - 1)),    x > 0,

with ``phi_0(x) = -log x + x - 1`` and ``phi_1(x) = x log x - x + 1``.
Except for the chi-square case ``g = 2`` on the whole line, ``phi`` is set to
``+inf`` for negative arguments and ``phi(0)`` is the right limit.

Every function accepts scalars or arrays and works in extended reals:
values outside a domain are ``+inf``, never errors. Derivatives are only
defined on open domains and raise :class:`DomainBoundaryError` outside.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "DomainMode",
    "DivergenceFamily",
    "DomainBoundaryError",
    "make_family",
    "kl",
    "kl_m",
    "chi2",
    "chi2_plus",
    "chi2_m",
    "hellinger",
    "legendre_numeric",
    "biconjugate_numeric",
    "golden_section",
]

_INF = math.inf

#: Power indices with hand-checked closed forms; others use the generic formula.
NAMED_GAMMAS = {-1.0: "chi2_m", 0.0: "kl_m", 0.5: "hellinger", 1.0: "kl", 2.0: "chi2"}


class DomainBoundaryError(ValueError):
    """An argument lies outside the open domain of a derivative."""


class DomainMode(str, enum.Enum):
    NONNEGATIVE_EXTENSION = "nonnegative_extension"
    FULL_LINE = "full_line"


def _as_output(value, like):
    if np.ndim(like) == 0:
        return float(np.asarray(value).reshape(()))
    return value


@dataclass(frozen=True)
class DivergenceFamily:
    """A power divergence with its domain endpoints.

    Use :func:`make_family` rather than the constructor; it fills the
    endpoints and validates the domain mode.
    """

    gamma: float
    domain_mode: DomainMode
    a_phi: float
    b_phi: float
    a_conj: float
    b_conj: float
    _kind: int = field(repr=False, compare=False)

    @property
    def name(self):
        base = NAMED_GAMMAS.get(self.gamma, f"power({self.gamma:g})")
        if self.gamma == 2.0 and self.domain_mode is DomainMode.NONNEGATIVE_EXTENSION:
            return "chi2_plus"
        return base

    @property
    def full_line(self):
        return self.domain_mode is DomainMode.FULL_LINE

    @property
    def phi_at_a(self):
        """``phi`` at the left domain endpoint (right limit)."""
        if self.full_line:
            return _INF
        return float(kernels.phi_values(self._kind, self.gamma, np.zeros(1))[0])

    @property
    def phi_prime_at_a(self):
        """Right limit of ``phi'`` at the left domain endpoint."""
        if self.full_line or self.gamma <= 1.0:
            return -_INF
        return -1.0 / (self.gamma - 1.0)

    @property
    def phi_prime_at_b(self):
        return _INF

    # -- primal side -------------------------------------------------------

    def phi(self, x):
        """Divergence function; ``+inf`` outside its domain."""
        v = kernels.phi_values(self._kind, self.gamma, np.asarray(x, dtype=float))
        return _as_output(v, x)

    def _check_open(self, x, lo, hi, what):
        arr = np.asarray(x, dtype=float)
        if np.any(np.isnan(arr)):
            raise ValueError(f"{what}: NaN argument")
        if np.any(arr <= lo) or np.any(arr >= hi):
            raise DomainBoundaryError(
                f"{what}: argument outside open interval ({lo}, {hi}) for {self.name}"
            )
        return arr

    def phi_prime(self, x):
        x_arr = self._check_open(x, self.a_phi, self.b_phi, "phi_prime")
        g = self.gamma
        with np.errstate(over="ignore"):
            if self.full_line:
                v = x_arr - 1.0
            elif g == 0.0:
                v = 1.0 - 1.0 / x_arr
            elif g == 1.0:
                v = np.log(x_arr)
            else:
                v = np.expm1((g - 1.0) * np.log(x_arr)) / (g - 1.0)
        return _as_output(v, x)

    def phi_second(self, x):
        x_arr = self._check_open(x, self.a_phi, self.b_phi, "phi_second")
        if self.full_line:
            v = np.ones_like(x_arr)
        else:
            v = x_arr ** (self.gamma - 2.0)
        return _as_output(v, x)

    @property
    def image_phi_prime(self):
        """Open interval ``(phi'(a_phi), phi'(b_phi))``."""
        return self.phi_prime_at_a, self.b_conj

    def phi_prime_inv(self, t):
        lo, hi = self.image_phi_prime
        t_arr = self._check_open(t, lo, hi, "phi_prime_inv")
        _, f1, _ = kernels.conj_values(self._kind, self.gamma, t_arr)
        return _as_output(f1, t)

    # -- conjugate side ----------------------------------------------------

    def conj(self, t):
        """Closed-form Fenchel conjugate; ``+inf`` beyond its domain."""
        t_arr = np.asarray(t, dtype=float)
        f, _, _ = kernels.conj_values(self._kind, self.gamma, t_arr)
        return _as_output(f, t)

    def conj_prime(self, t):
        t_arr = self._check_open(t, self.a_conj, self.b_conj, "conj_prime")
        _, f1, _ = kernels.conj_values(self._kind, self.gamma, t_arr)
        return _as_output(f1, t)

    def conj_second(self, t):
        t_arr = self._check_open(t, self.a_conj, self.b_conj, "conj_second")
        _, _, f2 = kernels.conj_values(self._kind, self.gamma, t_arr)
        return _as_output(f2, t)

    def conj_all(self, t):
        """Conjugate value and both derivatives as arrays, no domain check."""
        return kernels.conj_values(self._kind, self.gamma, np.asarray(t, dtype=float))

    def in_conj_interior(self, t):
        t = np.asarray(t, dtype=float)
        return (t > self.a_conj) & (t < self.b_conj)

    # -- analytic flags ------------------------------------------------------

    @property
    def strictly_convex(self):
        return True

    @property
    def essentially_smooth(self):
        # phi' must blow up at every finite endpoint of dom phi
        return self.full_line or self.gamma <= 1.0

    @property
    def coercive(self):
        if self.b_conj != _INF:
            return False
        return not (self.a_phi == -_INF and self.a_conj != -_INF)

    @property
    def regular_near_zero(self):
        # asserted for every power divergence; constants are not computed
        return True


def make_family(gamma, domain_mode=DomainMode.NONNEGATIVE_EXTENSION):
    """Build a power divergence family.

    Parameters
    ----------
    gamma : float
        Power index. 1 is KL, 0 modified KL, 2 chi-square, -1 modified
        chi-square, 1/2 Hellinger; any other finite value is allowed.
    domain_mode : DomainMode or str
        ``"nonnegative_extension"`` or ``"full_line"``; the latter only for
        ``gamma == 2``.
    """
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise ValueError("gamma must be finite")
    mode = DomainMode(domain_mode)
    if mode is DomainMode.FULL_LINE:
        if gamma != 2.0:
            raise ValueError(
                f"full_line domain requires gamma == 2 (phi_{gamma:g} is not "
                "finite and convex on the whole line)"
            )
        return DivergenceFamily(2.0, mode, -_INF, _INF, -_INF, _INF,
                                kernels.KIND_CHI2_FULL)
    if gamma == 0.0:
        kind = kernels.KIND_BURG
    elif gamma == 1.0:
        kind = kernels.KIND_KL
    else:
        kind = kernels.KIND_POWER
    # phi(y)/y -> 1/(1-gamma) for gamma < 1, grows without bound otherwise
    b_conj = 1.0 / (1.0 - gamma) if gamma < 1.0 else _INF
    return DivergenceFamily(gamma, mode, 0.0, _INF, -_INF, b_conj, kind)


def kl():
    return make_family(1.0)


def kl_m():
    return make_family(0.0)


def chi2():
    return make_family(2.0, DomainMode.FULL_LINE)


def chi2_plus():
    return make_family(2.0)


def chi2_m():
    return make_family(-1.0)


def hellinger():
    return make_family(0.5)


# -- numeric Legendre transforms (independent oracles) -----------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(func, lo, hi, tol=1e-13, maxiter=200):
    """Minimize a unimodal function on ``[lo, hi]`` by golden-section search.

    Returns ``(x, f(x))`` for the best point evaluated, endpoints included.
    """
    best_x, best_f = lo, func(lo)
    fh = func(hi)
    if fh < best_f:
        best_x, best_f = hi, fh
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(maxiter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = func(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def _sup_on_grid(objective, grid):
    """Brute-force supremum with one golden-section refinement at the argmax.

    Returns ``(value, index_of_grid_argmax)``.
    """
    vals = objective(grid)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    k = int(np.argmax(vals))
    if not np.isfinite(vals[k]):
        return vals[k], k
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    _, neg = golden_section(lambda s: -float(objective(np.array([s]))[0]), lo, hi)
    return max(vals[k], -neg), k


def default_x_grid(fam, num=4000):
    """Log-spaced grid on ``[1e-9, 1e6]`` plus 0, mirrored for the full line."""
    pos = np.logspace(-9.0, 6.0, num)
    if fam.full_line:
        return np.concatenate([-pos[::-1], [0.0], pos])
    return np.concatenate([[0.0], pos])


def legendre_numeric(fam, t, grid=None):
    """Numeric conjugate ``sup_x {t*x - phi(x)}`` over a bounded grid.

    Serves as an oracle for :meth:`DivergenceFamily.conj`. When the grid
    argmax sits on the outermost grid point the supremum is taken to be
    unbounded and ``+inf`` is returned. Returns ``-inf`` for an empty grid.
    """
    grid = default_x_grid(fam) if grid is None else np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0:
        return -_INF
    t = float(t)

    def obj(x):
        with np.errstate(invalid="ignore"):
            return t * x - fam.phi(np.asarray(x))

    value, k = _sup_on_grid(obj, grid)
    if grid.size > 1 and (k == grid.size - 1 or (fam.full_line and k == 0)):
        return _INF
    return float(value)


def default_t_grid(fam, num=4000):
    """Grid on the conjugate domain, dense near a finite right endpoint."""
    spread = np.concatenate([-np.logspace(3.0, -6.0, num // 2), [0.0],
                             np.logspace(-6.0, 3.0, num // 2)])
    if fam.b_conj == _INF:
        return spread
    b = fam.b_conj
    right = b - np.logspace(-12.0, math.log10(b + 1e3), num)
    return np.unique(np.concatenate([spread[spread < b], right, [b]]))


def biconjugate_numeric(fam, x, grid=None):
    """Numeric ``sup_t {x*t - phi*(t)}``; reproduces ``phi`` by closedness."""
    grid = default_t_grid(fam) if grid is None else np.sort(np.asarray(grid, dtype=float))
    x = float(x)

    def obj(t):
        with np.errstate(invalid="ignore"):
            return x * t - fam.conj(np.asarray(t))

    value, _ = _sup_on_grid(obj, grid)
    return float(value)
