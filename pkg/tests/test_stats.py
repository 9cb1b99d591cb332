import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rarelab import dynsys as D, limits as L, processes as P, rare_events as R, stats as S
from rarelab.empirical import EmpiricalLaw
from rarelab.intervals import Interval, IntervalUnion

G, DBL = D.gauss(), D.doubling()


def test_ecdf_examples():
    assert S.ecdf_eval(EmpiricalLaw([0.2, 0.8]), 0.5) == 0.5
    assert S.ecdf_eval(EmpiricalLaw([0.2, 0.8]), 0.1) == 0.0
    law = EmpiricalLaw([(1, 1), (2, 3), (4, 0)])
    assert S.ecdf_eval(law, (2, 2)) == pytest.approx(1 / 3)


def test_ks_examples():
    n = 100
    q = -np.log1p(-(np.arange(1, n + 1) - 0.5) / n)
    assert S.ks_distance(EmpiricalLaw(q), L.exp_law()) <= 0.005 + 1e-12
    assert S.ks_distance(EmpiricalLaw([math.log(2)]), L.exp_law()) == pytest.approx(0.5)
    assert S.ks_distance(EmpiricalLaw(np.zeros(10)), L.uniform01()) == 1.0


def test_ks_against_atom_law():
    # samples reproducing the atom of exp_theta exactly at 0 give only the continuous part's error
    th = 0.6
    n = 10_000
    u = (np.arange(n) + 0.5) / n
    x = np.where(u < 1 - th, 0.0, -np.log1p(-(u - (1 - th)) / th) / th)
    assert S.ks_distance(EmpiricalLaw(x), L.exp_theta(th)) <= 1.0 / n


@given(st.lists(st.floats(0, 10), min_size=1, max_size=60))
def test_ks_range_and_tie_update(xs):
    law = L.exp_law()
    d = S.ks_distance(np.array(xs), law)
    assert 0 <= d <= 1
    # brute force over both sides of each jump
    x = np.sort(xs)
    n = x.size
    worst = 0.0
    for v in np.unique(x):
        worst = max(worst, abs(np.sum(x <= v) / n - law.cdf(v)), abs(np.sum(x < v) / n - law.cdf_left(v)))
    assert d == pytest.approx(worst, abs=1e-15)


def test_ks_two_sample():
    assert S.ks_two_sample([1, 2, 3], [1, 2, 3]) == 0.0
    assert S.ks_two_sample([0, 0], [1, 1]) == 1.0


def test_tv_examples():
    pmf = lambda k: L.poisson_pmf(1.0, k)  # noqa: E731
    exact = np.array([pmf(k) for k in range(26)]) * 1e12
    assert S.tv_discrete(exact, pmf, n=1e12) == pytest.approx(0.0, abs=1e-10)
    assert S.tv_discrete(S.histogram([0] * 50), pmf) == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert S.tv_discrete(S.histogram([5] * 50), L.bernoulli([0.5, 0.5])) == pytest.approx(1.0)


def test_tv_folds_tail():
    # all mass beyond the cutoff against a law with all mass beyond it: 0
    assert S.tv_discrete(S.histogram([40] * 10, K=25), lambda k: 0.0, K=25) == 0.0


def test_pair_dependence_examples():
    a = np.array([0, 1] * 500)
    assert S.pair_dependence(a, a, "values") == pytest.approx(0.25)
    assert S.pair_dependence(a, np.zeros(1000), "values") == 0.0
    rng = np.random.default_rng(0)
    assert S.pair_dependence(rng.integers(0, 2, 100_000), rng.integers(0, 2, 100_000), "values") < 0.005
    x = rng.random(4000)
    assert S.pair_dependence(x, x) == pytest.approx(0.25 - 1 / 16)
    assert S.pair_dependence(x, x, S.quantile_cells(x, 2)) == pytest.approx(0.25)


def test_product_ecdf_distance():
    rng = np.random.default_rng(0)
    law = EmpiricalLaw(rng.exponential(size=(40_000, 2)))
    assert S.product_ecdf_distance(law, L.exp_law()) < 0.01
    dep = EmpiricalLaw(np.repeat(rng.exponential(size=(40_000, 1)), 2, axis=1))
    assert S.product_ecdf_distance(dep, L.exp_law()) > 0.2


@given(st.lists(st.tuples(st.floats(0, 5), st.floats(0, 5)), min_size=1, max_size=30),
       st.floats(0, 5), st.floats(0, 5), st.floats(0, 1), st.floats(0, 1))
def test_ecdf_monotone(pts, s, t, ds, dt):
    law = EmpiricalLaw(pts)
    assert law.cdf((s, t)) <= law.cdf((s + ds, t + dt))


def test_mc_err_formulas():
    assert S.ks_mc_err(40_000) == pytest.approx(1.36 / 200)
    assert S.ks2_mc_err(100, 100) == pytest.approx(1.36 * math.sqrt(2 / 100))
    assert S.mean_mc_err(10_000) == pytest.approx(0.01)
    assert S.pair_mc_err(10_000) == pytest.approx(0.005)
    assert S.tv_mc_err([0.5, 0.5], 100) == pytest.approx(0.05)


def test_estimate_measure_doubling_and_gauss():
    A = IntervalUnion((Interval(0.25, 0.5),))
    est = S.estimate_measure(DBL, A, n_steps=10**6, burn_in=100, seed=1)
    assert est.mass_kind == "estimated" and abs(est.mu_mass - 0.25) < 5 * est.std_err + 1e-3
    B = IntervalUnion((Interval(0.5, 1.0, False, True),))
    est = S.estimate_measure(G, B, n_steps=10**6, burn_in=100, seed=1)
    assert abs(est.mu_mass - 0.4150375) < 5 * est.std_err + 1e-3


def test_run_monte_carlo_reproducible_and_kac():
    fam = R.digit_tail()
    a = S.run_monte_carlo(G, fam, 20, None, P.MU_A, 4000, 2, 9, t_values=[1.0])
    b = S.run_monte_carlo(G, fam, 20, None, P.MU_A, 4000, 2, 9, t_values=[1.0], threads=3)
    assert a.gaps.tobytes() == b.gaps.tobytes()
    assert a.counts[1.0].tolist() == b.counts[1.0].tolist()
    assert abs(a.gaps[:, 0].mean() - 1) <= 4 / math.sqrt(a.n_eff)
    c = S.run_monte_carlo(G, fam, 20, None, P.MU_A, 4000, 2, 10)
    assert not np.array_equal(a.gaps, c.gaps)


def test_run_monte_carlo_rejects_tiny_runs():
    with pytest.raises(ValueError):
        S.run_monte_carlo(G, R.digit_tail(), 20, None, P.MU, 0, 1, 1)


def test_intermittent_target_gets_estimated_mass():
    sysm = D.intermittent(0.5)
    fam = R.shrinking_interval(sysm, 0.7, 0.05)
    res = S.run_monte_carlo(sysm, fam, 1, None, P.MU, 200, 1, 3, measure_steps=10**6, burn_in=100)
    assert res.target.mass_kind == "estimated" and 0 < res.mu_A < 0.2


def test_result_serialization_round_trip():
    res = S.run_monte_carlo(DBL, IntervalUnion((Interval(0, 0.125),), 0.125, "exact"), None, None, P.MU, 300, 2, 4)
    d = res.to_dict()
    assert len(d["gaps"]) == res.n_eff and d["mu_A"] == 0.125
    assert res.gap_law(2).dim == 2 and res.joint(0).dim == 2
