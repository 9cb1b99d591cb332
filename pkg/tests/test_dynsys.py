import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rarelab import dynsys as D
from rarelab.errors import EmptyCylinder, GaussAtZero, NoClosedFormMeasure
from rarelab.intervals import Interval
from rarelab.rng import SeededRng

G, DBL = D.gauss(), D.doubling()
PM = D.pwl_markov(["0", "1/4", "1/2", "1"], [("1/4", "1"), ("1/2", "1"), ("0", "1")])


def test_evaluate_map_examples():
    assert D.evaluate_map(G, 0.7) == pytest.approx(1 / 0.7 - 1, abs=1e-15)
    assert D.evaluate_map(DBL, 3 / 8) == 0.75
    assert D.evaluate_map(D.intermittent(0.5), 0.25) == pytest.approx(0.4267767, abs=1e-7)
    assert D.evaluate_map(D.intermittent(0.5), 0.75) == 0.5
    with pytest.raises(GaussAtZero):
        D.evaluate_map(G, 0.0)


def test_cf_digit_examples():
    assert D.cf_digit(0.7) == 1
    assert D.cf_digit(0.3) == 3
    assert D.cf_digit(0.5) == 2
    assert D.cf_digit(Fraction(1, 3)) == 3


def test_invariant_measure_examples():
    assert D.invariant_measure_of_interval(G, 0, 0.5) == pytest.approx(math.log(1.5) / math.log(2), abs=1e-15)
    assert D.invariant_measure_of_interval(G, 0.5, 1) == pytest.approx(0.4150375, abs=1e-7)
    assert D.invariant_measure_of_interval(DBL, 0, 0.25) == 0.25
    with pytest.raises(NoClosedFormMeasure):
        D.invariant_measure_of_interval(D.intermittent(0.5), 0, 0.5)


def test_quantile_examples():
    assert D.invariant_quantile(G, 0.5) == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert D.invariant_quantile(DBL, 0.37) == 0.37


def test_sample_invariant_positive_for_gauss():
    xs = [D.sample_invariant(G, SeededRng(1, i)) for i in range(200)]
    assert all(0 < x <= 1 for x in xs)


def test_cylinder_examples():
    J = D.cylinder_interval(G, [1]).intervals[0]
    assert (J.lo, J.hi, J.lo_closed, J.hi_closed) == (Fraction(1, 2), 1, False, True)
    J = D.cylinder_interval(G, [1, 1]).intervals[0]
    assert (J.lo, J.hi, J.lo_closed, J.hi_closed) == (Fraction(1, 2), Fraction(2, 3), False, False)
    J = D.cylinder_interval(DBL, [0, 1]).intervals[0]
    assert (J.lo, J.hi, J.lo_closed, J.hi_closed) == (Fraction(1, 4), Fraction(1, 2), True, False)


def test_pwl_cylinder_inadmissible():
    # branch 0 maps onto [1/4, 1), which misses branch 0's own cell
    with pytest.raises(EmptyCylinder):
        D.cylinder_exact(PM, [0, 0])


def test_pwl_validation():
    with pytest.raises(ValueError):
        D.pwl_markov(["0", "1/2", "1"], [("0", "1/2"), ("0", "1")])  # slope 1 is not expanding


def test_pwl_stationary_density():
    assert np.allclose(PM.cell_density, [12 / 19, 16 / 19, 24 / 19], atol=1e-13)


@given(st.floats(1e-9, 1.0, exclude_min=True))
def test_gauss_map_digit_consistency(x):
    k = D.cf_digit(x)
    assert D.evaluate_map(G, x) == pytest.approx(1 / x - k, abs=1e-9)
    assert D.cylinder_interval(G, [k]).contains(x)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.sampled_from(["gauss", "doubling", "pwl"]))
def test_measure_additivity(a, b, c, which):
    sysm = {"gauss": G, "doubling": DBL, "pwl": PM}[which]
    a, b, c = sorted((a, b, c))
    lhs = D.invariant_measure_of_interval(sysm, a, c)
    rhs = D.invariant_measure_of_interval(sysm, a, b) + D.invariant_measure_of_interval(sysm, b, c)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from(["gauss", "doubling", "pwl"]))
def test_invariance_under_preimage(a, b, which):
    sysm = {"gauss": G, "doubling": DBL, "pwl": PM}[which]
    a, b = sorted((a, b))
    value, tail = D.preimage_measure(sysm, a, b)
    assert value == pytest.approx(D.invariant_measure_of_interval(sysm, a, b), abs=1e-10 + tail)


@given(st.lists(st.integers(1, 30), min_size=1, max_size=6), st.lists(st.integers(1, 30), min_size=1, max_size=4))
def test_cylinder_nesting_gauss(w, ext):
    outer = D.cylinder_exact(G, w)
    inner = D.cylinder_exact(G, w + ext)
    assert inner.issubset(outer)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=20), st.lists(st.integers(0, 1), min_size=1, max_size=10))
def test_cylinder_nesting_doubling(w, ext):
    assert D.cylinder_exact(DBL, w + ext).issubset(D.cylinder_exact(DBL, w))


@pytest.mark.parametrize("sysm", [G, DBL], ids=["gauss", "doubling"])
def test_sample_invariant_histogram(sysm):
    N = 20_000
    gen = SeededRng(3).generator()
    xs = np.array([D.sample_invariant(sysm, gen, burn_in=0) for _ in range(N)])
    edges = np.linspace(0, 1, 65)
    counts = np.histogram(xs, edges)[0] / N
    masses = np.array([D.invariant_measure_of_interval(sysm, a, b) for a, b in zip(edges, edges[1:])])
    assert np.max(np.abs(counts - masses)) <= 4 / math.sqrt(N)


def test_iterate_doubling_exact():
    assert D.iterate(DBL, 3 / 8, 3) == 0.0


def test_intermittent_density_interface():
    sysm = D.intermittent(0.5)
    assert sysm.alpha == 0.5
    assert not sysm.is_exact
    with pytest.raises(NoClosedFormMeasure):
        D.invariant_density(sysm, 0.3)
