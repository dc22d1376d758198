import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phiproj import (DiscreteSignedMeasure, ProbabilityMeasure, chi2, density, divergence,
                     divergence_extended, jordan_split, kl, kl_m)
from phiproj.measures import ExtendedRealError, ext_sum

from _instances import all_families, family_ids


def test_probability_measure_validation():
    with pytest.raises(ValueError):
        ProbabilityMeasure([0.5, 0.6])
    with pytest.raises(ValueError):
        ProbabilityMeasure([1.0, -0.0 - 1e-3])
    with pytest.raises(ValueError):
        ProbabilityMeasure([1.0 - 1e-16, 1e-16])
    P = ProbabilityMeasure([0.5, 0.0, 0.5], atoms=["a", "b", "c"])
    assert P.atoms == ("a", "c")
    P = ProbabilityMeasure([2.0, 2.0], renormalize=True)
    np.testing.assert_allclose(P.weights, [0.5, 0.5])


def test_signed_measure_validation():
    with pytest.raises(ValueError):
        DiscreteSignedMeasure([1.0, 2.0], atoms=["a", "a"])
    with pytest.raises(ValueError):
        DiscreteSignedMeasure([1.0, np.inf])
    Q = DiscreteSignedMeasure([2.0, -1.0])
    assert Q.total_mass == 1.0 and Q.total_variation == 3.0
    with pytest.raises(ValueError):
        Q.weights[0] = 5.0


def test_density_examples():
    P = ProbabilityMeasure([0.5, 0.5], atoms="ab")
    q, pos, neg = density(P, P)
    np.testing.assert_array_equal(q, [1.0, 1.0])
    assert pos == neg == 0.0

    Q = DiscreteSignedMeasure([0.75, 0.25], atoms="ab")
    q, pos, neg = density(Q, P)
    np.testing.assert_array_equal(q, [1.5, 0.5])
    assert pos == neg == 0.0

    P1 = ProbabilityMeasure([1.0], atoms="a")
    Q = DiscreteSignedMeasure([0.5, 0.5], atoms="ab")
    q, pos, neg = density(Q, P1)
    np.testing.assert_array_equal(q, [0.5])
    assert pos == 0.5 and neg == 0.0


def test_density_matches_by_identifier_not_position():
    P = ProbabilityMeasure([0.25, 0.75], atoms=["x", "y"])
    Q = DiscreteSignedMeasure([0.3, 0.5, -0.2], atoms=["y", "x", "z"])
    q, pos, neg = density(Q, P)
    np.testing.assert_allclose(q, [2.0, 0.4])
    assert pos == 0.0 and neg == pytest.approx(0.2)


def test_divergence_examples():
    P = ProbabilityMeasure([0.5, 0.5])
    assert divergence(kl(), P, P) == 0.0
    Q = DiscreteSignedMeasure([0.75, 0.25])
    # direct evaluation: 0.5 * (0.5 * 0.25) + 0.5 * (0.5 * 0.25)
    assert divergence(chi2(), Q, P) == pytest.approx(0.125, abs=1e-15)
    Qz = DiscreteSignedMeasure([1.0, 0.0])
    assert divergence(kl_m(), Qz, P) == math.inf


def test_not_absolutely_continuous_is_infinite():
    P = ProbabilityMeasure([1.0], atoms="a")
    Q = DiscreteSignedMeasure([0.5, 0.5], atoms="ab")
    assert divergence(kl(), Q, P) == math.inf


def test_divergence_extended_kl_m_singular_part():
    P = ProbabilityMeasure([1.0], atoms="a")
    Q = DiscreteSignedMeasure([0.5, 0.5], atoms="ab")
    hand = (-math.log(0.5) + 0.5 - 1.0) + 1.0 * 0.5
    assert divergence_extended(kl_m(), Q, P) == pytest.approx(hand, abs=1e-15)
    assert hand == pytest.approx(math.log(2.0), abs=1e-15)
    # brute-force limit: divergence from P_eps = (1-eps) delta_a + eps delta_b
    vals = []
    for eps in (1e-4, 1e-6, 1e-8):
        Pe = ProbabilityMeasure([1 - eps, eps], atoms="ab")
        vals.append(divergence(kl_m(), Q, Pe))
    assert abs(vals[-1] - math.log(2.0)) < abs(vals[0] - math.log(2.0))
    assert vals[-1] == pytest.approx(math.log(2.0), abs=1e-6)


def test_divergence_extended_infinite_for_superlinear_family():
    P = ProbabilityMeasure([1.0], atoms="a")
    Q = DiscreteSignedMeasure([0.5, 0.5], atoms="ab")
    assert divergence_extended(chi2(), Q, P) == math.inf
    Qneg = DiscreteSignedMeasure([1.5, -0.5], atoms="ab")
    assert divergence_extended(kl_m(), Qneg, P) == math.inf


def test_ext_sum():
    assert ext_sum([1.0, 2.0]) == 3.0
    assert ext_sum([1.0, math.inf]) == math.inf
    with pytest.raises(ExtendedRealError):
        ext_sum([math.inf, -math.inf])


def test_jordan_split_examples():
    Q = DiscreteSignedMeasure([0.2, 0.8])
    plus, minus = jordan_split(Q)
    np.testing.assert_array_equal(plus.weights, Q.weights)
    np.testing.assert_array_equal(minus.weights, [0.0, 0.0])
    plus, minus = jordan_split(DiscreteSignedMeasure([2.0, -1.0]))
    np.testing.assert_array_equal(plus.weights, [2.0, 0.0])
    np.testing.assert_array_equal(minus.weights, [0.0, 1.0])
    plus, minus = jordan_split(DiscreteSignedMeasure([0.0, 0.0]))
    assert plus.total_variation == minus.total_variation == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20))
def test_jordan_round_trip(ws):
    Q = DiscreteSignedMeasure(ws)
    plus, minus = jordan_split(Q)
    np.testing.assert_array_equal(plus.weights - minus.weights, Q.weights)
    np.testing.assert_array_equal(plus.weights + minus.weights, np.abs(Q.weights))
    assert np.all(plus.weights * minus.weights == 0)


@pytest.mark.parametrize("fam", all_families(), ids=family_ids())
def test_nonnegativity_and_identity(fam):
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = int(rng.integers(1, 12))
        P = ProbabilityMeasure(rng.dirichlet(np.ones(n)), renormalize=True)
        Q = DiscreteSignedMeasure(rng.normal(size=n) * rng.uniform(0, 1), atoms=P.atoms)
        assert divergence(fam, Q, P) >= 0.0
    P = ProbabilityMeasure(rng.dirichlet(np.ones(5)), renormalize=True)
    assert divergence(fam, P, P) == 0.0


@pytest.mark.parametrize("fam", all_families(), ids=family_ids())
def test_convex_in_q(fam):
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = 6
        P = ProbabilityMeasure(rng.dirichlet(np.ones(n)), renormalize=True)
        Q1 = DiscreteSignedMeasure(rng.dirichlet(np.ones(n)))
        Q2 = DiscreteSignedMeasure(rng.dirichlet(np.ones(n)))
        Qm = DiscreteSignedMeasure(0.5 * Q1.weights + 0.5 * Q2.weights)
        lhs = divergence(fam, Qm, P)
        rhs = 0.5 * divergence(fam, Q1, P) + 0.5 * divergence(fam, Q2, P)
        assert lhs <= rhs + 1e-12 * max(1.0, rhs)


@pytest.mark.parametrize("fam", all_families(), ids=family_ids())
def test_extended_reduces_bit_exactly(fam):
    rng = np.random.default_rng(6)
    for _ in range(100):
        n = 8
        P = ProbabilityMeasure(rng.dirichlet(np.ones(n)), renormalize=True)
        Q = DiscreteSignedMeasure(rng.dirichlet(np.ones(n)) + rng.normal(scale=0.05, size=n))
        a, b = divergence(fam, Q, P), divergence_extended(fam, Q, P)
        assert a == b or (math.isinf(a) and math.isinf(b))
