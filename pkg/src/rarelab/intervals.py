"""Subintervals of [0, 1] with explicit endpoint conventions, and finite unions of them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np


class Interval(NamedTuple):
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = False

    def contains(self, x) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    @property
    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed)
        return False

    @property
    def length(self):
        return max(self.hi - self.lo, 0)

    def intersect(self, other: "Interval") -> "Interval":
        if self.lo > other.lo:
            lo, loc = self.lo, self.lo_closed
        elif self.lo < other.lo:
            lo, loc = other.lo, other.lo_closed
        else:
            lo, loc = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hic = self.hi, self.hi_closed
        elif self.hi > other.hi:
            hi, hic = other.hi, other.hi_closed
        else:
            hi, hic = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, loc, hic)

    def issubset(self, other: "Interval") -> bool:
        """Exact containment, honouring open/closed endpoints."""
        if self.is_empty:
            return True
        if self.lo < other.lo or self.hi > other.hi:
            return False
        if self.lo == other.lo and self.lo_closed and not other.lo_closed:
            return False
        if self.hi == other.hi and self.hi_closed and not other.hi_closed:
            return False
        return True

    def as_float(self) -> "Interval":
        return Interval(float(self.lo), float(self.hi), self.lo_closed, self.hi_closed)

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo}, {self.hi}{']' if self.hi_closed else ')'}"


def merge_intervals(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    """Sort, drop empties and fuse touching pieces whose shared endpoint is covered."""
    pieces = sorted((iv for iv in intervals if not iv.is_empty), key=lambda iv: (iv.lo, not iv.lo_closed))
    out: list[Interval] = []
    for iv in pieces:
        if out:
            prev = out[-1]
            if iv.lo < prev.hi or (iv.lo == prev.hi and (prev.hi_closed or iv.lo_closed)):
                if iv.hi > prev.hi:
                    out[-1] = Interval(prev.lo, iv.hi, prev.lo_closed, iv.hi_closed)
                elif iv.hi == prev.hi:
                    out[-1] = Interval(prev.lo, prev.hi, prev.lo_closed, prev.hi_closed or iv.hi_closed)
                continue
        out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class IntervalUnion:
    """A rare event as a finite disjoint union of subintervals of [0, 1].

    ``mass_kind`` is ``"exact"`` when ``mu_mass`` comes from a closed form,
    ``"estimated"`` when it is a Monte Carlo estimate carrying ``std_err``,
    and ``"unknown"`` when no invariant-measure value is attached yet.
    """

    intervals: tuple[Interval, ...]
    mu_mass: float = math.nan
    mass_kind: str = "unknown"
    std_err: float = 0.0
    _arrays: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        ivs = tuple(Interval(*iv) for iv in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        if not ivs:
            raise ValueError("IntervalUnion needs at least one interval")
        for iv in ivs:
            if iv.is_empty:
                raise ValueError(f"empty interval {iv}")
            if iv.lo < 0 or iv.hi > 1:
                raise ValueError(f"interval {iv} leaves [0, 1]")
        for a, b in zip(ivs, ivs[1:]):
            if b.lo < a.hi or (b.lo == a.hi and a.hi_closed and b.lo_closed):
                raise ValueError(f"intervals {a} and {b} overlap or are unsorted")
        if self.mass_kind not in ("exact", "estimated", "unknown"):
            raise ValueError(f"bad mass_kind {self.mass_kind!r}")
        if self.mass_kind != "unknown" and not self.mu_mass > 0:
            raise ValueError("mu_mass must be positive")

    @property
    def lo(self) -> float:
        return self.intervals[0].lo

    @property
    def hi(self) -> float:
        return self.intervals[-1].hi

    @property
    def is_single(self) -> bool:
        return len(self.intervals) == 1

    def contains(self, x) -> bool:
        return any(iv.contains(x) for iv in self.intervals)

    def contains_array(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape, dtype=bool)
        for iv in self.intervals:
            left = xs >= iv.lo if iv.lo_closed else xs > iv.lo
            right = xs <= iv.hi if iv.hi_closed else xs < iv.hi
            out |= left & right
        return out

    def issubset(self, other: "IntervalUnion") -> bool:
        return all(any(iv.issubset(ov) for ov in other.intervals) for iv in self.intervals)

    def with_mass(self, mass: float, kind: str = "exact", std_err: float = 0.0) -> "IntervalUnion":
        return IntervalUnion(self.intervals, float(mass), kind, float(std_err))

    def arrays(self):
        """Endpoint arrays ``(lo, hi, lo_closed, hi_closed)`` for the compiled kernels."""
        if self._arrays is None:
            arr = (
                np.array([float(iv.lo) for iv in self.intervals]),
                np.array([float(iv.hi) for iv in self.intervals]),
                np.array([iv.lo_closed for iv in self.intervals]),
                np.array([iv.hi_closed for iv in self.intervals]),
            )
            object.__setattr__(self, "_arrays", arr)
        return self._arrays

    def __str__(self):
        body = " u ".join(str(iv) for iv in self.intervals)
        return f"{body} (mu={self.mu_mass:.6g}, {self.mass_kind})"
