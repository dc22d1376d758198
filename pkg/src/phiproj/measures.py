"""Discrete signed measures and divergence evaluation.

Atoms are matched by exact identifier (any hashable), never by comparing
coordinates, so absolute continuity is decided exactly.
"""
import math

import numpy as np

__all__ = [
    "DiscreteSignedMeasure",
    "ProbabilityMeasure",
    "ExtendedRealError",
    "ext_sum",
    "density",
    "divergence",
    "divergence_extended",
    "jordan_split",
]

MIN_ATOM_WEIGHT = 1e-15
MASS_TOL = 1e-12


class ExtendedRealError(ArithmeticError):
    """Raised on an undefined extended-real operation such as inf - inf."""


def ext_sum(terms):
    """Sum of extended reals; ``+inf`` and ``-inf`` together is an error."""
    terms = [float(t) for t in terms]
    has_pos = any(t == math.inf for t in terms)
    has_neg = any(t == -math.inf for t in terms)
    if has_pos and has_neg:
        raise ExtendedRealError("inf - inf is undefined")
    if any(math.isnan(t) for t in terms):
        raise ExtendedRealError("NaN in extended-real sum")
    if has_pos:
        return math.inf
    if has_neg:
        return -math.inf
    return math.fsum(terms)


class DiscreteSignedMeasure:
    """Finitely many atoms carrying signed real weights.

    Parameters
    ----------
    atoms : sequence of hashable
        Unique identifiers; defaults to ``range(len(weights))``.
    weights : array_like
        Finite signed weights.
    coords : array_like, optional
        Per-atom coordinate rows, carried along for reporting only.
    """

    def __init__(self, weights, atoms=None, coords=None):
        w = np.array(weights, dtype=float).reshape(-1)
        if atoms is None:
            atoms = range(w.size)
        atoms = tuple(atoms)
        if len(atoms) != w.size:
            raise ValueError(f"{len(atoms)} atoms but {w.size} weights")
        if len(set(atoms)) != len(atoms):
            raise ValueError("atoms must be unique")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.shape[0] != w.size:
                raise ValueError("coords must have one row per atom")
            coords.setflags(write=False)
        w.setflags(write=False)
        self._atoms = atoms
        self._weights = w
        self._coords = coords
        self._index = {a: i for i, a in enumerate(atoms)}

    @property
    def atoms(self):
        return self._atoms

    @property
    def weights(self):
        return self._weights

    @property
    def coords(self):
        return self._coords

    def __len__(self):
        return len(self._atoms)

    def __repr__(self):
        return f"{type(self).__name__}(n={len(self)}, mass={self.total_mass:.6g})"

    def index(self, atom):
        return self._index[atom]

    @property
    def total_mass(self):
        return math.fsum(self._weights)

    @property
    def total_variation(self):
        return math.fsum(np.abs(self._weights))

    def weight_of(self, atom):
        i = self._index.get(atom)
        return 0.0 if i is None else float(self._weights[i])

    def aligned_to(self, atoms):
        """Weights reordered to ``atoms``; zero for atoms this measure lacks."""
        return np.array([self.weight_of(a) for a in atoms])

    @classmethod
    def from_density(cls, q, P):
        """Measure ``q dP`` on the atoms of ``P``."""
        q = np.asarray(q, dtype=float)
        return cls(q * P.weights, atoms=P.atoms, coords=P.coords)


class ProbabilityMeasure(DiscreteSignedMeasure):
    """Positive unit-mass measure used as the reference ``P``.

    Zero-weight atoms are dropped; weights in ``(0, 1e-15)`` are rejected.
    The total mass must be one within ``1e-12`` unless ``renormalize`` is set.
    """

    def __init__(self, weights, atoms=None, coords=None, renormalize=False):
        w = np.array(weights, dtype=float).reshape(-1)
        if atoms is None:
            atoms = range(w.size)
        atoms = list(atoms)
        if len(atoms) != w.size:
            raise ValueError(f"{len(atoms)} atoms but {w.size} weights")
        if np.any(w < 0):
            raise ValueError("probability weights must be nonnegative")
        tiny = (w > 0) & (w < MIN_ATOM_WEIGHT)
        if np.any(tiny):
            bad = [atoms[i] for i in np.flatnonzero(tiny)[:5]]
            raise ValueError(f"atom weights below {MIN_ATOM_WEIGHT}: {bad}")
        keep = w > 0
        if not np.any(keep):
            raise ValueError("probability measure needs at least one atom")
        w = w[keep]
        atoms = [a for a, k in zip(atoms, keep) if k]
        if coords is not None:
            coords = np.asarray(coords, dtype=float)[keep]
        mass = math.fsum(w)
        if renormalize:
            w = w / mass
        elif abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {mass!r} differs from 1 by more than {MASS_TOL}")
        super().__init__(w, atoms=atoms, coords=coords)

    @classmethod
    def uniform(cls, n, atoms=None, coords=None):
        return cls(np.full(n, 1.0 / n), atoms=atoms, coords=coords, renormalize=True)


def density(Q, P):
    """Density of ``Q`` on ``supp P`` plus the singular part outside it.

    Returns
    -------
    q : ndarray
        ``Q(x_j) / P(x_j)`` for the atoms of ``P``, in ``P``'s order.
    singular_pos, singular_neg : float
        Positive and negative ``Q``-mass on atoms outside ``supp P``.
    """
    q = Q.aligned_to(P.atoms) / P.weights
    pos = neg = 0.0
    outside = [w for a, w in zip(Q.atoms, Q.weights) if a not in P._index]
    if outside:
        o = np.asarray(outside)
        pos = math.fsum(o[o > 0])
        neg = -math.fsum(o[o < 0])
    return q, pos, neg


def _integral_phi(fam, q, P):
    vals = np.asarray(fam.phi(q), dtype=float)
    if np.any(np.isinf(vals)):
        return math.inf
    return math.fsum(P.weights * vals)


def divergence(fam, Q, P):
    """``sum_j P(x_j) phi(q_j)`` when ``Q << P``, otherwise ``+inf``."""
    q, pos, neg = density(Q, P)
    if pos != 0.0 or neg != 0.0:
        return math.inf
    return _integral_phi(fam, q, P)


def divergence_extended(fam, Q, P):
    """Divergence with the singular part charged at the conjugate endpoints.

    ``int phi(q) dP + b_conj * singular_pos - a_conj * singular_neg``, with
    ``0 * inf`` read as 0. Equals :func:`divergence` whenever ``Q << P``.
    """
    q, pos, neg = density(Q, P)
    regular = _integral_phi(fam, q, P)
    if pos == 0.0 and neg == 0.0:
        return regular
    terms = [regular]
    if pos != 0.0:
        terms.append(fam.b_conj * pos)
    if neg != 0.0:
        terms.append(-fam.a_conj * neg)
    return ext_sum(terms)


def jordan_split(Q):
    """Positive and negative variations, ``Q = Q_plus - Q_minus``."""
    w = Q.weights
    plus = DiscreteSignedMeasure(np.where(w > 0, w, 0.0), atoms=Q.atoms, coords=Q.coords)
    minus = DiscreteSignedMeasure(np.where(w < 0, -w, 0.0), atoms=Q.atoms, coords=Q.coords)
    return plus, minus
