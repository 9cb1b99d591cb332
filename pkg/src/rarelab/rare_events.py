"""Families of asymptotically rare targets and their cylinder approximations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import dynsys
from .dynsys import GAUSS, SystemSpec, cylinder_exact, interval_measure
from .errors import DegenerateTarget, EmptyApproximation, EmptyCylinder
from .intervals import Interval, IntervalUnion, merge_intervals

CYLINDER_AT_POINT = "cylinder_at_point"
DIGIT_TAIL = "digit_tail"
SHRINKING_INTERVAL = "shrinking_interval"
UNION_OF_RANK_ONE = "union_of_rank_one"
FAMILY_KINDS = (CYLINDER_AT_POINT, DIGIT_TAIL, SHRINKING_INTERVAL, UNION_OF_RANK_ONE)


@dataclass(frozen=True)
class RareFamilySpec:
    """A rule producing the target ``A_l`` for each ``l >= 1``.

    Attributes:
        kind: one of ``FAMILY_KINDS``.
        system: the map the targets live in.
        itinerary: for ``cylinder_at_point``, either a tuple of branch indices
            repeated periodically (a periodic point) or a callable ``j -> symbol``.
        center, rho0, radius_rule, base: for ``shrinking_interval``; the radius
            is ``rho0 / l`` (``"harmonic"``) or ``rho0 * base**-l`` (``"geometric"``).
        subset_rule: for ``union_of_rank_one``, ``l -> iterable of branch indices``.
    """

    kind: str
    system: SystemSpec
    itinerary: tuple | Callable[[int], int] | None = None
    center: float | None = None
    rho0: float = 0.1
    radius_rule: str = "harmonic"
    base: float = 2.0
    subset_rule: Callable[[int], Sequence[int]] | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == DIGIT_TAIL and self.system.kind != GAUSS:
            raise ValueError("digit_tail targets need the Gauss map")
        if self.kind == CYLINDER_AT_POINT and self.itinerary is None:
            raise ValueError("cylinder_at_point needs an itinerary")
        if self.kind == SHRINKING_INTERVAL:
            if self.center is None or not 0 <= self.center <= 1:
                raise ValueError("shrinking_interval needs a center in [0, 1]")
            if self.radius_rule not in ("harmonic", "geometric"):
                raise ValueError(f"unknown radius rule {self.radius_rule!r}")
        if self.kind == UNION_OF_RANK_ONE and self.subset_rule is None:
            raise ValueError("union_of_rank_one needs a subset_rule")

    @property
    def is_periodic_point(self) -> bool:
        return self.kind == CYLINDER_AT_POINT and isinstance(self.itinerary, tuple)

    def symbols(self, l: int) -> list[int]:
        if isinstance(self.itinerary, tuple):
            p = len(self.itinerary)
            return [self.itinerary[j % p] for j in range(l)]
        return [self.itinerary(j) for j in range(l)]

    def radius(self, l: int) -> float:
        if self.radius_rule == "harmonic":
            return self.rho0 / l
        return self.rho0 * self.base ** (-l)


def digit_tail(system: SystemSpec | None = None) -> RareFamilySpec:
    return RareFamilySpec(DIGIT_TAIL, system or dynsys.gauss())


def cylinder_at_point(system: SystemSpec, itinerary) -> RareFamilySpec:
    if not callable(itinerary):
        itinerary = tuple(itinerary)
    return RareFamilySpec(CYLINDER_AT_POINT, system, itinerary=itinerary)


def shrinking_interval(system: SystemSpec, center: float, rho0: float = 0.1, radius_rule: str = "harmonic",
                       base: float = 2.0) -> RareFamilySpec:
    return RareFamilySpec(SHRINKING_INTERVAL, system, center=center, rho0=rho0, radius_rule=radius_rule, base=base)


def union_of_rank_one(system: SystemSpec, subset_rule) -> RareFamilySpec:
    return RareFamilySpec(UNION_OF_RANK_ONE, system, subset_rule=subset_rule)


def union_from_intervals(system: SystemSpec, intervals) -> IntervalUnion:
    """Merge intervals into an :class:`IntervalUnion`, attaching the exact mass when known."""
    ivs = merge_intervals(intervals)
    if not ivs:
        raise DegenerateTarget("empty target")
    if not system.is_exact:
        return IntervalUnion(ivs)
    mass = math.fsum(interval_measure(system, iv) for iv in ivs)
    if not mass > 0:
        raise DegenerateTarget("target has zero measure")
    return IntervalUnion(ivs, mass, "exact")


def make_target(fam: RareFamilySpec, l: int) -> IntervalUnion:
    """The rare event ``A_l`` of the family."""
    if l < 1:
        raise ValueError("l must be >= 1")
    sys = fam.system
    if fam.kind == DIGIT_TAIL:
        return IntervalUnion((Interval(Fraction(0), Fraction(1, l), False, True),), math.log1p(1.0 / l) / dynsys.LN2, "exact")
    if fam.kind == CYLINDER_AT_POINT:
        try:
            J = cylinder_exact(sys, fam.symbols(l))
        except EmptyCylinder as exc:
            raise DegenerateTarget(str(exc)) from exc
        return union_from_intervals(sys, [J])
    if fam.kind == SHRINKING_INTERVAL:
        r = fam.radius(l)
        lo, hi = max(fam.center - r, 0.0), min(fam.center + r, 1.0)
        if not hi > lo:
            raise DegenerateTarget(f"interval around {fam.center} with radius {r} is empty")
        return union_from_intervals(sys, [Interval(Fraction(lo), Fraction(hi), True, True)])
    pieces = [sys.domain(i) for i in fam.subset_rule(l)]
    return union_from_intervals(sys, pieces)


def rank_of(A: IntervalUnion | float, q: float) -> int:
    """Cylinder rank ``ceil(-2 log mu(A) / -log q)`` used to approximate ``A``.

    A relative slack of 1e-12 absorbs rounding so that exact integer values
    (``mu(A) = q**k``) are not pushed up by one.
    """
    mu = A.mu_mass if isinstance(A, IntervalUnion) else float(A)
    if not 0 < mu < 1 or not 0 < q < 1:
        raise ValueError("need 0 < mu(A) < 1 and 0 < q < 1")
    val = -2.0 * math.log(mu) / -math.log(q)
    return max(1, math.ceil(val * (1 - 1e-12)))


# -- approximation by cylinders ------------------------------------------


def _as_exact(iv: Interval) -> Interval:
    return Interval(Fraction(iv.lo), Fraction(iv.hi), iv.lo_closed, iv.hi_closed)


def _mobius(M, y):
    a, b, c, d = M
    return (a * y + b) / (c * y + d)


def _mobius_inv(M, x):
    a, b, c, d = M
    return (d * x - b) / (a - c * x)


def _mul(M, k):
    # M composed with v_k(y) = 1 / (k + y)
    a, b, c, d = M
    return (b, a + k * b, d, c + k * d)


def _map_interval(f, J: Interval, increasing: bool) -> Interval:
    lo, hi = f(J.lo), f(J.hi)
    if increasing:
        return Interval(lo, hi, J.lo_closed, J.hi_closed)
    return Interval(hi, lo, J.hi_closed, J.lo_closed)


def _gauss_pieces(target: Interval, rank: int) -> list[Interval]:
    # Walk the cylinder tree in the coordinate y = T^n x of each cylinder, where
    # the children are the digit intervals I_k; all children fully inside the
    # target form one y-interval, and at most two boundary children are refined.
    pieces = []
    stack = [((1, 0, 0, 1), 0)]  # (Moebius coefficients of v_w, rank of w)
    while stack:
        M, n = stack.pop()
        increasing = n % 2 == 0
        C = _map_interval(lambda y: _mobius(M, y), Interval(Fraction(0), Fraction(1), False, True), increasing)
        part = C.intersect(target)
        if part.is_empty:
            continue
        J = _map_interval(lambda x: _mobius_inv(M, x), part, increasing)
        jl, jh = J.lo, J.hi
        if jh <= 0:
            continue
        k_min = math.ceil(1 / jh)
        if Fraction(1, k_min) == jh and not J.hi_closed:
            k_min += 1
        k_max = math.inf if jl == 0 else math.floor(1 / jl) - 1
        if k_min <= k_max:
            inner = Interval(Fraction(0) if k_max == math.inf else Fraction(1, k_max + 1), Fraction(1, k_min), False, True)
            pieces.append(_map_interval(lambda y: _mobius(M, y), inner, increasing))
        if n + 1 >= rank:
            continue
        candidates = {k_min - 1, math.floor(1 / jh), math.floor(1 / jh) + 1}
        if jl > 0:
            candidates |= {math.floor(1 / jl), math.floor(1 / jl) + 1, k_max + 1}
        for k in sorted(candidates):
            if k < 1 or k_min <= k <= k_max:
                continue
            Ik = Interval(Fraction(1, k + 1), Fraction(1, k), False, True)
            if not Ik.intersect(J).is_empty:
                stack.append((_mul(M, k), n + 1))
    return pieces


def _finite_pieces(sys: SystemSpec, target: Interval, rank: int) -> list[Interval]:
    pieces = []
    stack = [[i] for i in sys.branch_indices()]
    while stack:
        word = stack.pop()
        try:
            C = cylinder_exact(sys, word)
        except EmptyCylinder:
            continue
        if C.intersect(target).is_empty:
            continue
        if C.issubset(target):
            pieces.append(C)
        elif len(word) < rank:
            stack.extend(word + [i] for i in sys.branch_indices())
    return pieces


def approximate_by_cylinders(sys: SystemSpec, A: IntervalUnion | Interval, rank: int) -> IntervalUnion:
    """Union of all rank-``rank`` cylinders contained in the interval ``A``.

    Endpoints are handled exactly (rational arithmetic), so the result is a
    subset of ``A``. For the Gauss map, the infinitely many digit cylinders
    accumulating at an endpoint are collected in closed form.
    """
    if isinstance(A, IntervalUnion):
        if not A.is_single:
            raise ValueError("approximate_by_cylinders needs a single interval")
        A = A.intervals[0]
    if rank < 1:
        raise ValueError("rank must be >= 1")
    target = _as_exact(A)
    if sys.kind == GAUSS:
        pieces = _gauss_pieces(target, rank)
    elif sys.n_branches is not None and sys.kind != dynsys.INTERMITTENT:
        pieces = _finite_pieces(sys, target, rank)
    else:
        raise ValueError("cylinder approximation needs a Gauss, doubling or PWL system")
    if not pieces:
        raise EmptyApproximation(f"no rank-{rank} cylinder fits inside {A}")
    return union_from_intervals(sys, pieces)


def approximation_error(sys: SystemSpec, A: IntervalUnion, approx: IntervalUnion) -> float:
    """Relative deficit ``mu(A \\ A') / mu(A)`` of an inner approximation."""
    return max(A.mu_mass - approx.mu_mass, 0.0) / A.mu_mass
