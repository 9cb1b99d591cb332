import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rarelab import limits as L
from rarelab.empirical import EmpiricalLaw
from rarelab.errors import DimensionMismatch

GOLD = (math.sqrt(5) - 1) / 2


def test_cdf_examples():
    assert L.cdf(L.exp_law(), 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert L.cdf(L.exp_theta(0.618034), 0.0) == pytest.approx(0.381966, abs=1e-12)
    assert L.cdf(L.exp_theta(0.3), 1e9) == 1.0
    assert L.cdf(L.exp_theta(0.3), -1) == 0.0
    assert L.exp_theta(0.3).cdf_left(0.0) == 0.0


def test_law_validation():
    with pytest.raises(ValueError):
        L.exp_theta(0.0)
    with pytest.raises(ValueError):
        L.bernoulli([0.3, 0.3])
    with pytest.raises(DimensionMismatch):
        L.product_iid(L.exp_law(), 2).cdf([1.0])
    assert L.product_iid(L.exp_law(), 2).cdf([1.0, 2.0]) == pytest.approx((1 - math.exp(-1)) * (1 - math.exp(-2)))


def test_duality_examples():
    assert L.duality_predict_hitting(L.exp_law(), 0, [1.0]) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert L.duality_predict_hitting(L.exp_theta(0.5), 0, [2.0]) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    point_mass = EmpiricalLaw(np.ones(10))
    assert L.duality_predict_hitting(point_mass, 0, [0.5]) == pytest.approx(0.5)
    assert L.duality_predict_hitting(point_mass, 0, [3.0]) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatch):
        L.duality_predict_hitting(point_mass, 1, [1.0, 1.0])


def test_duality_two_dimensional_product():
    law = L.product_iid(L.exp_law(), 2)
    t = [0.7, 1.3]
    assert L.duality_predict_hitting(law, 1, t) == pytest.approx((1 - math.exp(-0.7)) * (1 - math.exp(-1.3)), abs=1e-15)


def test_duality_curve_matches_pointwise():
    rng = np.random.default_rng(0)
    law = EmpiricalLaw(rng.exponential(size=500))
    grid = np.linspace(0, 4, 41)
    curve = L.duality_curve(law, grid)
    assert np.allclose(curve, [L.duality_predict_hitting(law, 0, [t]) for t in grid], atol=1e-14)
    assert np.all(np.diff(curve) >= 0) and curve[0] == 0 and curve[-1] <= 1
    # a long-return sample with mean above 1 stays a distribution function
    assert L.duality_curve(EmpiricalLaw(np.full(10, 2.0)), [5.0])[0] == 1.0


@given(st.floats(0.0, 50.0))
def test_exp_is_duality_fixed_point(t):
    assert L.duality_predict_hitting(L.exp_law(), 0, [t]) == pytest.approx(-math.expm1(-t), abs=1e-12)


def test_fixed_point_examples():
    grid = np.linspace(0, 3, 31)
    assert L.fixed_point_residual(L.exp_theta(0.4), 0.4, grid) <= 1e-12
    assert L.fixed_point_residual(L.exp_law(), 1.0, grid) <= 1e-12
    assert L.fixed_point_residual(L.exp_law(), 0.5, [0.0]) == pytest.approx(0.5)


@given(st.floats(0.05, 1.0), st.lists(st.floats(0.0, 20.0), min_size=1, max_size=20))
def test_fixed_point_residual_vanishes(theta, grid):
    assert L.fixed_point_residual(L.exp_theta(theta), theta, grid) <= 1e-12


def test_fixed_point_detects_mismatch():
    grid = np.linspace(0, 3, 31)
    for th in np.linspace(0.1, 1.0, 10):
        for other in np.linspace(0.1, 1.0, 10):
            if abs(th - other) >= 0.1 - 1e-12:
                assert L.fixed_point_residual(L.exp_theta(th), other, grid) > 0.05


def test_fixed_point_empirical_two_dim():
    rng = np.random.default_rng(1)
    law = EmpiricalLaw(rng.exponential(size=(20_000, 2)))
    assert L.fixed_point_residual(law, 1.0, np.linspace(0.1, 3, 10), d=1) < 0.03
    assert L.fixed_point_residual(law, 1.0, np.linspace(0.1, 3, 10), d=0) < 0.03


def test_compound_geom_examples():
    t, th = 1.3, 0.4
    e = math.exp(-t)
    assert L.compound_geom_pmf(t, th, 0) == pytest.approx(e, rel=1e-14)
    assert L.compound_geom_pmf(t, th, 1) == pytest.approx(e * t * th, rel=1e-14)
    assert L.compound_geom_pmf(t, th, 2) == pytest.approx(e * (t * th * (1 - th) + t**2 * th**2 / 2), rel=1e-14)
    assert L.compound_geom_pmf(1, 0.5, 3) == pytest.approx(0.099634015317265637, rel=1e-14)


def test_compound_geom_theta_one_is_poisson():
    for k in range(10):
        assert L.compound_geom_pmf(2.0, 1.0, k) == pytest.approx(L.poisson_pmf(2.0, k), rel=1e-12)


@given(st.floats(0.0, 5.0), st.floats(0.1, 1.0))
def test_compound_geom_mass(t, theta):
    # 20 + 10 t / theta alone is too short for small theta (t = 1, theta = 0.5 leaves 1.5e-9)
    K = int(20 + 10 * t / theta + 25 / theta)
    assert L.compound_geom_pmf_vector(t, theta, K).sum() >= 1 - 1e-10


def _convolution_pmf(t, theta, K):
    geom = np.zeros(K + 1)
    geom[1:] = theta * (1 - theta) ** np.arange(K)
    conv, out = np.eye(1, K + 1)[0], np.zeros(K + 1)
    for j in range(K + 1):
        out += L.poisson_pmf(t, j) * conv
        conv = np.convolve(conv, geom)[: K + 1]
    return out


@given(st.floats(0.0, 5.0), st.floats(0.05, 1.0))
def test_compound_geom_matches_convolution(t, theta):
    assert np.allclose(L.compound_geom_pmf_vector(t, theta, 40), _convolution_pmf(t, theta, 40), atol=1e-15)


def test_metric_examples():
    assert L.metric_time(0, math.inf) == 1.0
    assert L.metric_time(L.INFINITY, 0) == 1.0
    assert L.metric_time(1, 1) == 0.0
    assert L.metric_time(1, 2) == pytest.approx(0.2325442, abs=1e-7)
    assert L.metric_sequence([1, 2, 3], [1, 2, 3], 3).value == 0.0
    d = L.metric_sequence([0] * 4, [math.inf] * 4, 4)
    assert d.value == pytest.approx(0.9375) and d.truncation_bound == 2**-4
    assert L.metric_sequence([0, 0, 0, 0], [0, 0, math.inf, 0], 4).value == pytest.approx(0.125)


def test_extended_real_is_not_a_float():
    assert L.as_extended(math.inf) is L.INFINITY
    assert L.INFINITY.is_infinite and L.INFINITY.exp_neg() == 0.0
    with pytest.raises(ValueError):
        L.ExtendedReal(-1)


def test_metric_time_is_a_metric():
    rng = np.random.default_rng(2)
    pts = np.where(rng.random((1000, 3)) < 0.05, math.inf, rng.exponential(2.0, size=(1000, 3)))
    for s, t, u in pts:
        assert L.metric_time(s, t) == L.metric_time(t, s)
        assert L.metric_time(s, u) <= L.metric_time(s, t) + L.metric_time(t, u) + 1e-15


@given(st.sampled_from(["exp", "theta", "uniform", "poisson", "cgeom"]),
       st.lists(st.floats(-2.0, 30.0), min_size=2, max_size=30))
def test_cdf_monotone(kind, ts):
    law = {"exp": L.exp_law(), "theta": L.exp_theta(0.37), "uniform": L.uniform01(),
           "poisson": L.poisson_count(2.0), "cgeom": L.compound_geom_count(1.0, 0.5)}[kind]
    ts = sorted(ts)
    vals = [law.cdf(t) for t in ts]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(law.cdf_left(t) <= law.cdf(t) + 1e-15 for t in ts)
    assert law.cdf(-1) == 0.0 and law.cdf(1e9) == pytest.approx(1.0, abs=1e-12)
