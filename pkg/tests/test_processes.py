import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from rarelab import dynsys as D, processes as P, rare_events as R
from rarelab.errors import GaussAtZero, HittingOverflow
from rarelab.intervals import Interval, IntervalUnion

G, DBL = D.gauss(), D.doubling()
A_DBL = IntervalUnion((Interval(0, Fraction(1, 4)),), 0.25, "exact")


def test_first_hitting_time_examples():
    assert P.first_hitting_time(DBL, A_DBL, 3 / 8, 100) == 3
    # x in T^{-1}A hits after one step
    assert P.first_hitting_time(DBL, A_DBL, 0.1, 100) == 1
    with pytest.raises(HittingOverflow) as err:
        P.first_hitting_time(DBL, A_DBL, 7 / 8, 1)
    assert err.value.partial.raw_times == []


def test_collect_hit_sample_chart():
    obs = P.ObservableSpec(P.INTERVAL_CHART)
    s = P.collect_hit_sample(DBL, A_DBL, obs, 3 / 8, 1, 100)
    assert s.raw_times == [3] and s.marks == [0.0]
    s = P.collect_hit_sample(DBL, A_DBL, obs, 0.125, 1, 100)
    assert s.start_in_A and s.mark0 == pytest.approx(0.5)


def test_digit_residue_mark():
    A = R.make_target(R.digit_tail(), 2)
    obs = P.ObservableSpec(P.DIGIT_RESIDUE, m=2)
    x = 1 / (1 + 1 / (5 + 0.5))  # digits 1, 5, 2, ...
    s = P.collect_hit_sample(G, A, obs, x, 1, 100)
    assert s.raw_times == [1] and s.marks == [1.0]


def test_normalize_and_points():
    s = P.HitSample([3, 10], [0.2, 0.9])
    assert P.normalize_times(s, 0.25) == [0.75, 1.75]
    assert P.normalize_times(P.HitSample([1], [0.0]), 1e-3) == [1e-3]
    assert P.normalize_times(P.HitSample([], [], overflow=True), 0.5) == []
    pts = P.spatiotemporal_points(s, 0.1)
    assert np.allclose(pts, [(0.3, 0.2), (1.0, 0.9)], atol=1e-15)
    with pytest.raises(ValueError):
        P.HitSample([3, 3], [0, 0])


def test_counting_marginal_examples():
    assert P.counting_marginal(DBL, A_DBL, 3 / 8, 0.0, 0.25) == 0
    assert P.counting_marginal(DBL, A_DBL, 3 / 8, 0.75, 0.25) == 1
    assert P.counting_marginal(DBL, A_DBL, 3 / 8, 0.74, 0.25) == 0


def test_observable_validation():
    with pytest.raises(ValueError):
        P.ObservableSpec(P.DIGIT_RESIDUE).validate(DBL, A_DBL)
    two = IntervalUnion((Interval(0, 0.1), Interval(0.5, 0.6)))
    with pytest.raises(ValueError):
        P.ObservableSpec(P.INTERVAL_CHART).validate(DBL, two)
    parts = (IntervalUnion((Interval(0, Fraction(1, 8)),)), IntervalUnion((Interval(Fraction(1, 8), Fraction(1, 4)),)))
    P.ObservableSpec(P.SUBSET_INDEX, parts=parts).validate(DBL, A_DBL)
    with pytest.raises(ValueError):
        P.ObservableSpec(P.SUBSET_INDEX, parts=parts[:1]).validate(DBL, A_DBL)


@given(st.floats(1e-6, 1.0), st.integers(2, 40), st.integers(1, 4))
def test_gauss_record_invariants(x, l, m):
    A = R.make_target(R.digit_tail(), l)
    obs = P.ObservableSpec(P.DIGIT_RESIDUE, m=m)
    try:
        s = P.collect_hit_sample(G, A, obs, x, 3, 10**6, strict=False)
    except GaussAtZero:  # float orbit collapsed onto a rational
        assume(False)
    assert all(t >= 1 for t in s.gaps)
    assert all(v in range(m) for v in s.marks)


@given(st.floats(0.0, 1.0), st.integers(1, 6))
def test_subset_index_marks_locate_hits(x, k):
    parts = (IntervalUnion((Interval(0, Fraction(1, 8)),)), IntervalUnion((Interval(Fraction(1, 8), Fraction(1, 4)),)))
    obs = P.ObservableSpec(P.SUBSET_INDEX, parts=parts)
    b = P.run_hits(DBL, A_DBL, P.Starts.from_points(DBL, [x]), k, 10**4, obs, threads=1)
    for j in range(b.nhits[0]):
        assert parts[int(b.marks[0, j])].contains(b.pos[0, j])


@given(st.floats(0.0, 1.0), st.floats(0.01, 3.0))
def test_counting_matches_record(x, t):
    mu = 0.25
    n = math.floor(t / mu)
    s = P.collect_hit_sample(DBL, A_DBL, None, x, n + 1, 10**4, strict=False)
    assert P.counting_marginal(DBL, A_DBL, x, t, mu) == P.count_from_sample(s, t, mu)


@given(st.floats(1e-6, 1.0), st.floats(0.01, 2.0))
def test_counting_matches_record_gauss(x, t):
    A = R.make_target(R.digit_tail(), 5)
    mu = A.mu_mass
    n = math.floor(t / mu)
    try:
        s = P.collect_hit_sample(G, A, None, x, n + 1, 10**5, strict=False)
    except GaussAtZero:
        assume(False)
    assert P.counting_marginal(G, A, x, t, mu) == P.count_from_sample(s, t, mu)


def test_start_in_A_return_equals_hit():
    A = R.make_target(R.digit_tail(), 3)
    x = (math.sqrt(13) - 3) / 2  # digits 3, 3, 3, ...
    s = P.collect_hit_sample(G, A, None, x, 2, 10**5)
    assert s.start_in_A
    assert P.first_hitting_time(G, A, x, 10**5) == s.raw_times[0]


@pytest.mark.parametrize("measure", [P.MU, P.MU_A, P.LINEAR, P.LEBESGUE])
def test_sample_starts_deterministic(measure):
    A = R.make_target(R.digit_tail(), 10)
    a = P.sample_starts(G, measure, 500, 11, target=A)
    b = P.sample_starts(G, measure, 500, 11, target=A, threads=3)
    assert np.array_equal(a.x0, b.x0)
    assert np.all((a.x0 > 0) & (a.x0 <= 1))
    if measure == P.MU_A:
        assert np.all(A.contains_array(a.x0))


def test_sample_starts_mu_a_distribution():
    A = R.make_target(R.digit_tail(), 4)
    xs = P.sample_starts(G, P.MU_A, 20_000, 5, target=A).x0
    # conditional cdf on (0, 1/4]: log(1 + x) / log(1.25)
    grid = np.linspace(0.01, 0.25, 25)
    emp = np.array([np.mean(xs <= g) for g in grid])
    assert np.max(np.abs(emp - np.log1p(grid) / np.log(1.25))) < 4 / math.sqrt(20_000)


def test_sample_starts_linear_density():
    xs = P.sample_starts(G, P.LINEAR, 20_000, 5).x0
    grid = np.linspace(0.05, 1, 20)
    emp = np.array([np.mean(xs <= g) for g in grid])
    assert np.max(np.abs(emp - grid**2)) < 4 / math.sqrt(20_000)


def test_doubling_mu_starts_keep_mixing():
    # 64-bit windows with random tails: long orbits must not collapse to 0
    starts = P.sample_starts(DBL, P.MU, 200, 2)
    b = P.run_hits(DBL, IntervalUnion((Interval(0.5, 1.0),), 0.5, "exact"), starts, 200, 10**3, threads=1)
    assert np.all(b.complete)
    assert 0.45 < np.mean(np.diff(b.times, axis=1) == 1) < 0.55


def test_default_cap():
    assert P.default_cap(A_DBL) == 200


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("RARELAB_THREADS", "3")
    assert P.resolve_threads(None) == 3
    assert P.resolve_threads(2) == 2
