"""Concrete ergodic interval maps: iteration, invariant measures, inverse branches, cylinders.

Four families are supported:

* ``gauss``: the continued-fraction map ``x -> 1/x - floor(1/x)`` with branches
  ``I_k = (1/(k+1), 1/k]``, ``k >= 1`` and invariant density ``1/((1+x) log 2)``.
* ``doubling``: ``x -> 2x mod 1`` with branches ``[0, 1/2)``, ``[1/2, 1)``.
* ``pwl_markov``: increasing piecewise-linear Markov maps; branch ``i`` maps
  ``[p_i, p_{i+1})`` affinely onto ``[a_i, b_i)`` where the ``a_i, b_i`` are
  partition points. The invariant density is constant on partition cells.
* ``intermittent``: ``x -> x (1 + (2x)^alpha)`` on ``[0, 1/2)`` and
  ``x -> 2x - 1`` on ``[1/2, 1)``, with a neutral fixed point at 0.

Gauss, doubling and rational piecewise-linear systems keep their branch data as
:class:`fractions.Fraction` so that cylinder endpoints can be computed exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import EmptyCylinder, GaussAtZero, NoClosedFormMeasure
from .intervals import Interval, IntervalUnion
from .rng import as_generator

GAUSS = "gauss"
DOUBLING = "doubling"
PWL = "pwl_markov"
INTERMITTENT = "intermittent"
KINDS = (GAUSS, DOUBLING, PWL, INTERMITTENT)
KIND_CODES = {GAUSS: 0, DOUBLING: 1, PWL: 2, INTERMITTENT: 3}

# Gauss digits above this cap (points below its reciprocal) are redrawn or flagged.
GAUSS_DIGIT_CAP = 10**12
GAUSS_FLOOR = 1.0 / GAUSS_DIGIT_CAP

LN2 = math.log(2.0)

_UNIT = Interval(Fraction(0), Fraction(1), True, False)


def _frac(v) -> Fraction:
    # floats are taken at their exact binary value; pass "1/3" for non-dyadic rationals
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True)
class SystemSpec:
    """An immutable description of one interval map.

    Build instances with :func:`gauss`, :func:`doubling`, :func:`pwl_markov`
    or :func:`intermittent` rather than directly.
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind == PWL:
            breaks, images = self.params
            if breaks[0] != 0 or breaks[-1] != 1 or any(b <= a for a, b in zip(breaks, breaks[1:])):
                raise ValueError("breaks must increase strictly from 0 to 1")
            if len(images) != len(breaks) - 1:
                raise ValueError("need one image per branch")
            for i, (a, b) in enumerate(images):
                if a not in breaks or b not in breaks or b <= a:
                    raise ValueError(f"image of branch {i} must be a union of partition cells")
                if (b - a) / (breaks[i + 1] - breaks[i]) <= 1:
                    raise ValueError(f"branch {i} is not expanding")
        if self.kind == INTERMITTENT:
            alpha, c = self.params
            if not 0 < alpha < 1:
                raise ValueError("intermittent exponent must lie in (0, 1)")
            if c != 0.5:
                raise ValueError("only the branch point c = 1/2 is supported")

    # -- structure -----------------------------------------------------

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    @property
    def is_exact(self) -> bool:
        """Whether the invariant measure has a closed form here."""
        return self.kind != INTERMITTENT

    @property
    def n_branches(self):
        if self.kind == GAUSS:
            return None
        if self.kind == PWL:
            return len(self.params[1])
        return 2

    def branch_indices(self):
        if self.kind == GAUSS:
            return itertools.count(1)
        return iter(range(self.n_branches))

    @property
    def partition(self):
        """Branch domains in order; an infinite lazy sequence for Gauss."""
        if self.kind == GAUSS:
            return (self.domain(k) for k in itertools.count(1))
        return tuple(self.domain(i) for i in range(self.n_branches))

    def _check_branch(self, i):
        if self.kind == GAUSS:
            if int(i) != i or i < 1:
                raise ValueError(f"Gauss branch index must be a positive integer, got {i}")
        elif not 0 <= i < self.n_branches:
            raise ValueError(f"branch index {i} out of range for {self.kind}")

    def domain(self, i) -> Interval:
        self._check_branch(i)
        if self.kind == GAUSS:
            return Interval(Fraction(1, i + 1), Fraction(1, i), False, True)
        if self.kind in (DOUBLING, INTERMITTENT):
            half = Fraction(1, 2)
            return Interval(Fraction(0), half, True, False) if i == 0 else Interval(half, Fraction(1), True, False)
        breaks = self.params[0]
        return Interval(breaks[i], breaks[i + 1], True, False)

    def image(self, i) -> Interval:
        self._check_branch(i)
        if self.kind == PWL:
            a, b = self.params[1][i]
            return Interval(a, b, True, False)
        return _UNIT

    def is_increasing(self, i) -> bool:
        return self.kind != GAUSS

    def inverse_branch(self, i, y):
        """``v_i(y)``, the point of branch ``i`` mapped to ``y``; exact for Fraction input."""
        if self.kind == GAUSS:
            return 1 / (i + y)
        if self.kind == DOUBLING:
            return (y + i) / 2
        if self.kind == PWL:
            (a, b), p0, p1 = self.params[1][i], self.params[0][i], self.params[0][i + 1]
            return p0 + (y - a) * (p1 - p0) / (b - a)
        if i == 1:
            return (y + 1) / 2
        y = float(y)
        if y <= 0.0:
            return 0.0
        if y >= 1.0:
            return 0.5
        return brentq(lambda x: _intermittent_left(x, self.alpha) - y, 0.0, 0.5, xtol=1e-16, rtol=4e-16)

    def inverse_derivative(self, i, y) -> float:
        """Lebesgue derivative ``v_i'(y)`` (negative on decreasing branches)."""
        if self.kind == GAUSS:
            return -1.0 / (i + float(y)) ** 2
        if self.kind == DOUBLING:
            return 0.5
        if self.kind == PWL:
            return float(1 / self.slopes[i])
        if i == 1:
            return 0.5
        x = float(self.inverse_branch(0, y))
        return 1.0 / (1.0 + (1.0 + self.alpha) * (2.0 * x) ** self.alpha)

    def branch_of(self, x) -> int:
        if self.kind == GAUSS:
            return cf_digit(x)
        if self.kind in (DOUBLING, INTERMITTENT):
            return 0 if x < 0.5 else 1
        breaks = self.params[0]
        for i in range(len(breaks) - 1):
            if x < breaks[i + 1]:
                return i
        return len(breaks) - 2

    # -- parameters ----------------------------------------------------

    @property
    def alpha(self) -> float:
        return float(self.params[0])

    @cached_property
    def slopes(self) -> tuple:
        breaks, images = self.params
        return tuple((b - a) / (breaks[i + 1] - breaks[i]) for i, (a, b) in enumerate(images))

    @cached_property
    def cell_density(self) -> np.ndarray:
        """PWL invariant density value on each partition cell."""
        return _pwl_stationary_density(self)

    @cached_property
    def kernel_params(self) -> np.ndarray:
        if self.kind == PWL:
            breaks, images = self.params
            m = len(images)
            return np.array([m, *map(float, breaks), *(float(a) for a, _ in images), *(float(b) for _, b in images)])
        if self.kind == INTERMITTENT:
            return np.array([self.alpha])
        return np.zeros(1)


def gauss() -> SystemSpec:
    return SystemSpec(GAUSS)


def doubling() -> SystemSpec:
    return SystemSpec(DOUBLING)


def pwl_markov(breaks, images) -> SystemSpec:
    """Piecewise-linear Markov map from partition points and per-branch image intervals.

    Values may be Fractions, ints, or strings such as ``"1/3"``.
    """
    breaks = tuple(_frac(b) for b in breaks)
    images = tuple((_frac(a), _frac(b)) for a, b in images)
    return SystemSpec(PWL, (breaks, images))


def intermittent(alpha: float = 0.5, c: float = 0.5) -> SystemSpec:
    return SystemSpec(INTERMITTENT, (float(alpha), float(c)))


def _intermittent_left(x, alpha):
    return x * (1.0 + (2.0 * x) ** alpha)


def _pwl_stationary_density(sys: SystemSpec, tol: float = 1e-14, max_iter: int = 200_000) -> np.ndarray:
    breaks, images = sys.params
    m = len(images)
    lengths = np.array([float(breaks[j + 1] - breaks[j]) for j in range(m)])
    # column-stochastic mass transfer: branch i spreads its mass over its image cells by length
    P = np.zeros((m, m))
    for i, (a, b) in enumerate(images):
        for j in range(m):
            if a <= breaks[j] and breaks[j + 1] <= b:
                P[j, i] = lengths[j] / float(b - a)
    lazy = 0.5 * (np.eye(m) + P)
    mass = lengths.copy()
    for _ in range(max_iter):
        new = lazy @ mass
        new /= new.sum()
        if np.max(np.abs(P @ new - new)) < tol:
            mass = new
            break
        mass = new
    else:
        raise RuntimeError("stationary vector did not converge")
    return mass / lengths


# -- map evaluation -------------------------------------------------------


def evaluate_map(sys: SystemSpec, x: float) -> float:
    """One step of the map."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if sys.kind == GAUSS:
        if x == 0:
            raise GaussAtZero("the Gauss map is undefined at 0")
        return min(max(1.0 / x - cf_digit(x), 0.0), 1.0)
    if sys.kind == DOUBLING:
        y = 2.0 * x
        return y - 1.0 if y >= 1.0 else y
    if sys.kind == INTERMITTENT:
        return _intermittent_left(x, sys.alpha) if x < 0.5 else 2.0 * x - 1.0
    i = sys.branch_of(x)
    breaks, images = sys.params
    a, b = images[i]
    return float(a) + (x - float(breaks[i])) * float(sys.slopes[i])


def cf_digit(x) -> int:
    """Continued-fraction digit ``floor(1/x)``, i.e. the k with x in (1/(k+1), 1/k]."""
    if x <= 0:
        raise GaussAtZero("no continued-fraction digit at 0")
    if x > 1:
        raise ValueError(f"x={x} outside (0, 1]")
    if isinstance(x, Fraction):
        return math.floor(1 / x)
    # 1/x can round across an integer; settle the boundary exactly
    k, X = math.floor(1.0 / x), Fraction(x)
    while k > 1 and k * X > 1:
        k -= 1
    while (k + 1) * X <= 1:
        k += 1
    return k


def iterate(sys: SystemSpec, x: float, n: int) -> float:
    for _ in range(n):
        x = evaluate_map(sys, x)
    return x


# -- invariant measure ----------------------------------------------------


def invariant_density(sys: SystemSpec, x):
    if sys.kind == GAUSS:
        return 1.0 / ((1.0 + np.asarray(x, dtype=float)) * LN2)
    if sys.kind == DOUBLING:
        return np.ones_like(np.asarray(x, dtype=float))
    if sys.kind == PWL:
        breaks = np.array([float(b) for b in sys.params[0]])
        idx = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, len(breaks) - 2)
        return sys.cell_density[idx]
    raise NoClosedFormMeasure("the intermittent map has no closed-form invariant density")


def invariant_cdf(sys: SystemSpec, x):
    """``mu([0, x])``, vectorised."""
    x = np.asarray(x, dtype=float)
    if sys.kind == GAUSS:
        return np.log1p(x) / LN2
    if sys.kind == DOUBLING:
        return x.copy()
    if sys.kind == PWL:
        breaks = np.array([float(b) for b in sys.params[0]])
        cum = np.concatenate([[0.0], np.cumsum(sys.cell_density * np.diff(breaks))])
        idx = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, len(breaks) - 2)
        return cum[idx] + sys.cell_density[idx] * (x - breaks[idx])
    raise NoClosedFormMeasure("the intermittent map has no closed-form invariant measure")


def invariant_quantile(sys: SystemSpec, u):
    """Inverse of :func:`invariant_cdf`, vectorised."""
    u = np.asarray(u, dtype=float)
    if sys.kind == GAUSS:
        return np.expm1(u * LN2)
    if sys.kind == DOUBLING:
        return u.copy()
    if sys.kind == PWL:
        breaks = np.array([float(b) for b in sys.params[0]])
        cum = np.concatenate([[0.0], np.cumsum(sys.cell_density * np.diff(breaks))])
        idx = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(breaks) - 2)
        return np.minimum(breaks[idx] + (u - cum[idx]) / sys.cell_density[idx], breaks[idx + 1])
    raise NoClosedFormMeasure("the intermittent map has no closed-form invariant measure")


def invariant_measure_of_interval(sys: SystemSpec, a, b) -> float:
    """``mu([a, b])`` in closed form (endpoints carry no mass)."""
    if not 0 <= a <= b <= 1:
        raise ValueError(f"need 0 <= a <= b <= 1, got ({a}, {b})")
    if sys.kind == GAUSS:
        a, b = float(a), float(b)
        return math.log1p((b - a) / (1.0 + a)) / LN2
    if sys.kind == DOUBLING:
        return float(b - a)
    if sys.kind == PWL:
        breaks = sys.params[0]
        total = 0.0
        for j in range(len(breaks) - 1):
            lo, hi = max(a, breaks[j]), min(b, breaks[j + 1])
            if hi > lo:
                total += sys.cell_density[j] * float(hi - lo)
        return total
    raise NoClosedFormMeasure("use processes.estimate_measures for the intermittent map")


def measure_of_intervals(sys: SystemSpec, intervals) -> float:
    return math.fsum(invariant_measure_of_interval(sys, iv.lo, iv.hi) for iv in intervals)


def sample_invariant(sys: SystemSpec, rng, burn_in: int = 10_000) -> float:
    """One point distributed according to the invariant measure.

    Gauss, doubling and PWL maps use inverse-CDF sampling; Gauss draws giving
    points below the digit cap (including 0) are redrawn. The intermittent map
    pushes a uniform point forward ``burn_in`` steps.
    """
    gen = as_generator(rng)
    if sys.kind == INTERMITTENT:
        x = gen.random()
        while x == 0.0:
            x = gen.random()
        for _ in range(burn_in):
            x = evaluate_map(sys, x)
        return x
    while True:
        x = float(invariant_quantile(sys, gen.random()))
        if sys.kind != GAUSS or x >= GAUSS_FLOOR:
            return x


# -- cylinders ------------------------------------------------------------


def _apply_inverse(sys: SystemSpec, i, J: Interval) -> Interval:
    lo, hi = sys.inverse_branch(i, J.lo), sys.inverse_branch(i, J.hi)
    if sys.is_increasing(i):
        return Interval(lo, hi, J.lo_closed, J.hi_closed)
    return Interval(hi, lo, J.hi_closed, J.lo_closed)


def cylinder_exact(sys: SystemSpec, word) -> Interval:
    """The cylinder ``[w_0, ..., w_{n-1}]`` with exact endpoints where the system allows."""
    word = list(word)
    if not word:
        raise ValueError("cylinder word must be nonempty")
    J = sys.domain(word[-1])
    for i in reversed(word[:-1]):
        J = J.intersect(sys.image(i))
        if J.is_empty:
            raise EmptyCylinder(f"word {word} is inadmissible")
        J = _apply_inverse(sys, i, J).intersect(sys.domain(i))
    if J.is_empty:
        raise EmptyCylinder(f"word {word} is inadmissible")
    return J


def interval_measure(sys: SystemSpec, J: Interval) -> float:
    """Invariant measure of an interval with possibly exact endpoints, without cancellation."""
    if sys.kind == GAUSS:
        return math.log1p(float((J.hi - J.lo) / (1 + J.lo))) / LN2
    return invariant_measure_of_interval(sys, J.lo, J.hi)


def cylinder_interval(sys: SystemSpec, word) -> IntervalUnion:
    """Cylinder as an :class:`IntervalUnion`; endpoints stay exact (Fractions) when available."""
    J = cylinder_exact(sys, word)
    if sys.is_exact:
        return IntervalUnion((J,), interval_measure(sys, J), "exact")
    return IntervalUnion((J,))


def preimage_measure(sys: SystemSpec, a: float, b: float, gauss_digits: int = 10**6) -> tuple[float, float]:
    """``mu(T^{-1}[a, b])`` summed branchwise, with a bound on the truncated part.

    For Gauss only digits up to ``gauss_digits`` are summed; the omitted tail
    equals ``log2((K+1+b)/(K+1+a)) <= (b-a)/((K+1) log 2)``, returned as the bound.
    """
    if sys.kind == GAUSS:
        k = np.arange(1, gauss_digits + 1, dtype=float)
        lo, hi = 1.0 / (k + b), 1.0 / (k + a)
        total = math.fsum(np.log1p((hi - lo) / (1.0 + lo)) / LN2)
        return total, (b - a) / ((gauss_digits + 1) * LN2)
    total = 0.0
    for i in sys.branch_indices():
        J = Interval(a, b, True, True).intersect(sys.image(i))
        if J.is_empty:
            continue
        P = _apply_inverse(sys, i, J)
        total += invariant_measure_of_interval(sys, P.lo, P.hi)
    return total, 0.0
