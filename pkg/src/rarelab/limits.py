"""Limit-law oracles, the return/hitting duality transform, and the time metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, pdtr

from .empirical import EmpiricalLaw
from .errors import DimensionMismatch

EXP, EXP_THETA, UNIFORM01, BERNOULLI, PRODUCT_IID, POISSON_COUNT, COMPOUND_GEOM_COUNT = (
    "exp", "exp_theta", "uniform01", "bernoulli", "product_iid", "poisson_count", "compound_geom_count")
LAW_KINDS = (EXP, EXP_THETA, UNIFORM01, BERNOULLI, PRODUCT_IID, POISSON_COUNT, COMPOUND_GEOM_COUNT)
DISCRETE = (BERNOULLI, POISSON_COUNT, COMPOUND_GEOM_COUNT)


@dataclass(frozen=True)
class LimitLawSpec:
    """A theoretical law.

    ``exp_theta`` is the compound law ``(1 - theta) + theta (1 - exp(-theta t))``
    with an atom ``1 - theta`` at 0. Count laws live on the nonnegative integers:
    ``poisson_count`` has mean ``t``, ``compound_geom_count`` is a Poisson(``t``)
    number of independent geometric(``theta``) batches on ``{1, 2, ...}``.
    """

    kind: str
    theta: float = 1.0
    probs: tuple = ()
    component: "LimitLawSpec | None" = None
    dim: int = 1
    t: float = 0.0

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}")
        if self.kind in (EXP_THETA, COMPOUND_GEOM_COUNT) and not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if self.kind == BERNOULLI:
            p = np.asarray(self.probs, dtype=float)
            if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
                raise ValueError("Bernoulli probabilities must be nonnegative and sum to 1")
        if self.kind == PRODUCT_IID and (self.component is None or self.dim < 1 or self.component.kind == PRODUCT_IID):
            raise ValueError("product_iid needs a one-dimensional component law and dim >= 1")
        if self.kind in (POISSON_COUNT, COMPOUND_GEOM_COUNT) and self.t < 0:
            raise ValueError("t must be >= 0")

    @property
    def is_discrete(self) -> bool:
        return self.kind in DISCRETE

    def pmf(self, k: int) -> float:
        if self.kind == BERNOULLI:
            return float(self.probs[k]) if 0 <= k < len(self.probs) else 0.0
        if self.kind == POISSON_COUNT:
            return poisson_pmf(self.t, k)
        if self.kind == COMPOUND_GEOM_COUNT:
            return compound_geom_pmf(self.t, self.theta, k)
        raise ValueError(f"{self.kind} has no pmf")

    def cdf(self, t) -> float:
        """Distribution function; ``t`` is a vector for ``product_iid``."""
        if self.kind == PRODUCT_IID:
            t = np.atleast_1d(np.asarray(t, dtype=float))
            if t.size != self.dim:
                raise DimensionMismatch(f"need {self.dim} coordinates, got {t.size}")
            return math.prod(self.component.cdf(x) for x in t)
        t = float(t)
        if t < 0:
            return 0.0
        if self.kind == EXP:
            return -math.expm1(-t)
        if self.kind == EXP_THETA:
            return (1 - self.theta) - self.theta * math.expm1(-self.theta * t)
        if self.kind == UNIFORM01:
            return min(t, 1.0)
        if math.isinf(t):
            return 1.0
        if self.kind == BERNOULLI:
            return math.fsum(self.probs[: int(math.floor(t)) + 1])
        if self.kind == POISSON_COUNT:
            return float(pdtr(math.floor(t), self.t))
        # the pmf decays at least geometrically past a few means; cap the vector there
        n = min(int(math.floor(t)), _count_cap(self.t, self.theta))
        return min(1.0, math.fsum(compound_geom_pmf_vector(self.t, self.theta, n)))

    def cdf_left(self, t: float) -> float:
        """Left limit ``P[X < t]``."""
        t = float(t)
        if t <= 0:
            return 0.0
        if self.kind == EXP_THETA:
            return self.cdf(t)
        if self.is_discrete:
            return self.cdf(math.ceil(t) - 1)
        return self.cdf(t)

    def cdf_array(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.kind == EXP:
            return np.where(ts < 0, 0.0, -np.expm1(-np.maximum(ts, 0)))
        if self.kind == EXP_THETA:
            th = self.theta
            return np.where(ts < 0, 0.0, (1 - th) - th * np.expm1(-th * np.maximum(ts, 0)))
        if self.kind == UNIFORM01:
            return np.clip(ts, 0.0, 1.0)
        return np.array([self.cdf(t) for t in ts.ravel()]).reshape(ts.shape)

    def cdf_left_array(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.kind == EXP_THETA:
            return np.where(ts <= 0, 0.0, self.cdf_array(ts))
        if self.kind in (EXP, UNIFORM01):
            return self.cdf_array(ts)
        return np.array([self.cdf_left(t) for t in ts.ravel()]).reshape(ts.shape)

    def integrated_survival(self, t: float) -> float:
        """``int_0^t (1 - F(s)) ds`` in closed form."""
        t = max(float(t), 0.0)
        if self.kind == EXP:
            return -math.expm1(-t)
        if self.kind == EXP_THETA:
            return -math.expm1(-self.theta * t)
        if self.kind == UNIFORM01:
            u = min(t, 1.0)
            return u - u * u / 2
        if self.is_discrete:
            # survival is constant on [k, k+1)
            total, k = 0.0, 0
            while k < t:
                total += (1 - self.cdf(k)) * (min(t, k + 1) - k)
                k += 1
            return total
        raise ValueError(f"no integrated survival for {self.kind}")


def exp_law() -> LimitLawSpec:
    return LimitLawSpec(EXP)


def exp_theta(theta: float) -> LimitLawSpec:
    return LimitLawSpec(EXP_THETA, theta=theta)


def uniform01() -> LimitLawSpec:
    return LimitLawSpec(UNIFORM01)


def bernoulli(probs: Sequence[float]) -> LimitLawSpec:
    return LimitLawSpec(BERNOULLI, probs=tuple(float(p) for p in probs))


def product_iid(component: LimitLawSpec, dim: int) -> LimitLawSpec:
    return LimitLawSpec(PRODUCT_IID, component=component, dim=dim)


def poisson_count(t: float) -> LimitLawSpec:
    return LimitLawSpec(POISSON_COUNT, t=t)


def compound_geom_count(t: float, theta: float) -> LimitLawSpec:
    return LimitLawSpec(COMPOUND_GEOM_COUNT, theta=theta, t=t)


def cdf(law: LimitLawSpec, t) -> float:
    return law.cdf(t)


# -- count laws -----------------------------------------------------------------


def poisson_pmf(t: float, k: int) -> float:
    if k < 0:
        return 0.0
    if t == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-t + k * math.log(t) - gammaln(k + 1))


def compound_geom_pmf_vector(t: float, theta: float, K: int) -> np.ndarray:
    """``P[N = k]`` for ``k = 0..K`` by the Panjer recursion.

    For a Poisson(``t``) number of batches with batch law ``g``,
    ``P[N = k] = (t / k) sum_j j g_j P[N = k - j]``; here ``g_j = theta (1 - theta)^(j - 1)``.
    """
    if t < 0 or not 0 < theta <= 1 or K < 0:
        raise ValueError("need t >= 0, theta in (0, 1], K >= 0")
    j = np.arange(1, K + 1)
    jg = j * theta * (1 - theta) ** (j - 1)
    out = np.zeros(K + 1)
    out[0] = math.exp(-t)
    for k in range(1, K + 1):
        out[k] = t / k * np.dot(jg[:k], out[k - 1::-1])
    return out


def _count_cap(t: float, theta: float) -> int:
    # index past which the compound count tail is far below double precision
    return int(100 + 40 * t / theta + 40 / theta)


def compound_geom_pmf(t: float, theta: float, k: int) -> float:
    """``P[N = k]`` for ``N = G_1 + ... + G_{N_t}``, ``N_t`` Poisson(t), ``G_i`` geometric(theta)."""
    if k < 0:
        return 0.0
    return float(compound_geom_pmf_vector(t, theta, k)[k])


# -- duality and fixed points -------------------------------------------------------


def _check_t(t_vector, n: int) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t_vector, dtype=float))
    if t.size != n:
        raise DimensionMismatch(f"need {n} time coordinates, got {t.size}")
    return t


def duality_predict_hitting(ret_law, d: int, t_vector) -> float:
    """Hitting-law value ``F^{[d+1]}(t_0, ..., t_d)`` predicted from the return law.

    With return samples ``(R_0, ..., R_d)``, stationarity of the return
    process gives ``F~^{[d]}(t_1..t_d) - F~^{[d+1]}(s, t_1..t_d) = P[R_0 > s,
    R_j <= t_j]``, whose integral over ``s`` in ``[0, t_0]`` is
    ``E[min(R_0, t_0); R_j <= t_j]``: exact for a step-function law.

    Args:
        ret_law: an :class:`EmpiricalLaw` of dimension ``>= d + 1``, or an exact
            :class:`LimitLawSpec` (``d = 0`` or an iid product).
        d: dimension of the return marginal being integrated against.
        t_vector: ``d + 1`` nonnegative times.
    """
    t = _check_t(t_vector, d + 1)
    if isinstance(ret_law, LimitLawSpec):
        comp, rest = ret_law, 1.0
        if ret_law.kind == PRODUCT_IID:
            if ret_law.dim < d + 1:
                raise DimensionMismatch(f"law has dimension {ret_law.dim}, need {d + 1}")
            comp = ret_law.component
            rest = math.prod(comp.cdf(x) for x in t[1:])
        elif d != 0:
            raise DimensionMismatch("a one-dimensional law supports d = 0 only")
        return rest * comp.integrated_survival(t[0])
    if ret_law.dim < d + 1:
        raise DimensionMismatch(f"return law has dimension {ret_law.dim}, need {d + 1}")
    s = ret_law.samples
    ok = np.all(s[:, 1:d + 1] <= t[1:], axis=1) if d else np.ones(ret_law.n, dtype=bool)
    # an empirical return mean above 1 would push the prediction past 1; a distribution function stops there
    return min(1.0, float(np.sum(np.minimum(s[ok, 0], t[0])) / ret_law.n))


def duality_curve(ret_law: EmpiricalLaw, grid) -> np.ndarray:
    """One-dimensional duality transform on a grid (``d = 0``), vectorised."""
    r = np.sort(ret_law.samples[:, 0])
    csum = np.concatenate([[0.0], np.cumsum(r)])
    g = np.asarray(grid, dtype=float)
    idx = np.searchsorted(r, g, side="right")
    return np.minimum((csum[idx] + g * (r.size - idx)) / r.size, 1.0)


def fixed_point_residual(ret_law, theta: float, grid, d: int = 0) -> float:
    """Sup over the grid of ``|F~(t) - (1 - theta) - theta int_0^t (1 - F~)|``.

    With ``d = 1`` the two-dimensional form of the characterisation is
    checked on the grid of pairs ``(t_0, t_1)``.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    grid = np.asarray(grid, dtype=float)
    if d not in (0, 1):
        raise DimensionMismatch("only d = 0 and d = 1 are supported")
    if isinstance(ret_law, LimitLawSpec):
        if d:
            raise DimensionMismatch("d = 1 needs an empirical law")
        res = [abs(ret_law.cdf(t) - (1 - theta) - theta * ret_law.integrated_survival(t)) for t in grid]
        return float(max(res))
    if d == 0:
        F = ret_law.marginal([0]).cdf_grid(grid)
        return float(np.max(np.abs(F - (1 - theta) - theta * duality_curve(ret_law, grid))))
    if ret_law.dim < 2:
        raise DimensionMismatch("d = 1 needs a two-dimensional return law")
    s = ret_law.samples
    worst = 0.0
    for t1 in grid:
        ok = s[:, 1] <= t1
        F1 = np.mean(ok)
        for t0 in grid:
            F2 = np.mean(ok & (s[:, 0] <= t0))
            integral = np.sum(np.minimum(s[ok, 0], t0)) / ret_law.n
            worst = max(worst, abs(F2 - (1 - theta) * F1 - theta * integral))
    return float(worst)


# -- metrics ----------------------------------------------------------------------------


class ExtendedReal:
    """A point of ``[0, inf]``; the point at infinity is a distinct object, not a float."""

    __slots__ = ("value",)

    def __init__(self, value=None):
        if value is not None:
            value = float(value)
            if not 0 <= value < math.inf:
                raise ValueError("finite values must lie in [0, inf)")
        self.value = value

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def exp_neg(self) -> float:
        return 0.0 if self.value is None else math.exp(-self.value)

    def __eq__(self, other):
        return isinstance(other, ExtendedReal) and other.value == self.value

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return "ExtendedReal(inf)" if self.value is None else f"ExtendedReal({self.value!r})"


INFINITY = ExtendedReal()


def as_extended(x) -> ExtendedReal:
    if isinstance(x, ExtendedReal):
        return x
    return INFINITY if x == math.inf else ExtendedReal(x)


def metric_time(s, t) -> float:
    """``|exp(-s) - exp(-t)|`` on ``[0, inf]``."""
    return abs(as_extended(s).exp_neg() - as_extended(t).exp_neg())


class SequenceDistance(NamedTuple):
    value: float
    truncation_bound: float


def metric_sequence(a: Sequence, b: Sequence, J: int) -> SequenceDistance:
    """Product metric truncated after ``J`` entries; the omitted tail is at most ``2**-J``."""
    if J < 0 or len(a) < J or len(b) < J:
        raise ValueError("both sequences need at least J entries")
    value = math.fsum(2.0 ** -(j + 1) * metric_time(a[j], b[j]) for j in range(J))
    return SequenceDistance(value, 2.0 ** -J)
