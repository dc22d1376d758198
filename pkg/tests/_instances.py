"""Seeded problem generators shared by the test modules."""
import numpy as np

from phiproj import ProbabilityMeasure, build_problem, make_family
from phiproj.family import DomainMode

GAMMAS = (-1.0, 0.0, 0.5, 1.0, 2.0)


def all_families():
    fams = [make_family(g) for g in GAMMAS]
    fams.append(make_family(2.0, DomainMode.FULL_LINE))
    return fams


def family_ids():
    return [f.name for f in all_families()]


def unit_interval(family, n=2001):
    """Uniform P on the midpoint grid of [0, 1] with the constraint x - 1/4."""
    x = (np.arange(n) + 0.5) / n
    P = ProbabilityMeasure.uniform(n)
    return build_problem(P, x - 0.25, family), x


def random_family(rng):
    g = float(rng.choice(GAMMAS))
    if g == 2.0 and rng.random() < 0.5:
        return make_family(2.0, DomainMode.FULL_LINE)
    return make_family(g)


def random_instance(rng, family=None, n=None, l=None, concentration=2.0):
    """Random P and constraints with a strictly positive feasible measure.

    The columns are centered at the mean under a random positive ``Q0``, so
    ``Q0`` itself is feasible with positive density.
    """
    family = random_family(rng) if family is None else family
    l = int(rng.integers(0, 4)) if l is None else l
    n = int(rng.integers(l + 2, 51)) if n is None else n
    P = ProbabilityMeasure(rng.dirichlet(np.full(n, concentration)), renormalize=True)
    G = rng.normal(size=(n, l))
    Q0 = rng.dirichlet(np.full(n, concentration))
    G = G - Q0 @ G
    return build_problem(P, G, family)
