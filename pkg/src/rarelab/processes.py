"""Hitting-time, return-time and local (mark) processes along orbits.

The scalar functions (:func:`first_hitting_time`, :func:`collect_hit_sample`,
:func:`counting_marginal`) work on one start point. The batch functions
(:func:`sample_starts`, :func:`run_hits`, :func:`run_counts`) drive the
compiled kernels over many start points, one RNG stream per sample ordinal.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .dynsys import DOUBLING, GAUSS, GAUSS_FLOOR, INTERMITTENT, SystemSpec, invariant_cdf, invariant_quantile
from .errors import GaussAtZero, HittingOverflow
from .intervals import IntervalUnion, merge_intervals
from .rng import stream_generators

MU, MU_A, LINEAR, LEBESGUE = "mu", "mu_A", "linear", "lebesgue"
MEASURES = (MU, MU_A, LINEAR, LEBESGUE)
DEFAULT_CAP_MULTIPLIER = 50.0
DEFAULT_BURN_IN = 10_000

NONE, INTERVAL_CHART, DIGIT_THRESHOLD, DIGIT_RESIDUE, SUBSET_INDEX = (
    "none", "interval_chart", "digit_threshold", "digit_residue", "subset_index")
OBSERVABLE_KINDS = (NONE, INTERVAL_CHART, DIGIT_THRESHOLD, DIGIT_RESIDUE, SUBSET_INDEX)


# -- observables ------------------------------------------------------------


@dataclass(frozen=True)
class ObservableSpec:
    """A local observable ``psi_A`` on the target.

    Attributes:
        kind: one of ``OBSERVABLE_KINDS``.
        theta: threshold fraction for ``digit_threshold``: the mark is 1 when
            the digit is at least ``l / theta``.
        l: digit level of the ``digit_threshold`` target; inferred from a
            ``(0, 1/l]`` target when omitted.
        m: modulus for ``digit_residue``.
        parts: the cells for ``subset_index``; the mark is the cell index.
    """

    kind: str = NONE
    theta: float = 0.5
    l: int | None = None
    m: int = 2
    parts: tuple = ()

    def __post_init__(self):
        if self.kind not in OBSERVABLE_KINDS:
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.kind == DIGIT_THRESHOLD and not 0 < self.theta <= 1:
            raise ValueError("digit threshold fraction must lie in (0, 1]")
        if self.kind == DIGIT_RESIDUE and self.m < 1:
            raise ValueError("residue modulus must be >= 1")

    def validate(self, sys: SystemSpec, A: IntervalUnion) -> None:
        """Raise ``ValueError`` when the observable does not apply to ``(sys, A)``."""
        if self.kind == INTERVAL_CHART and not A.is_single:
            raise ValueError("interval_chart needs a single-interval target")
        if self.kind in (DIGIT_THRESHOLD, DIGIT_RESIDUE):
            if sys.kind != GAUSS:
                raise ValueError(f"{self.kind} is defined for the Gauss map only")
            iv = A.intervals[0]
            if not (A.is_single and iv.lo == 0 and iv.hi_closed and iv.hi > 0 and (1 / iv.hi) == int(1 / iv.hi)):
                raise ValueError(f"{self.kind} needs a digit-tail target (0, 1/l]")
        if self.kind == SUBSET_INDEX:
            if not self.parts:
                raise ValueError("subset_index needs parts")
            pieces = sorted((iv for p in self.parts for iv in p.intervals), key=lambda iv: (iv.lo, not iv.lo_closed))
            try:
                IntervalUnion(pieces)  # rejects overlaps
            except ValueError as exc:
                raise ValueError("subset_index parts overlap") from exc
            if merge_intervals(pieces) != merge_intervals(A.intervals):
                raise ValueError("subset_index parts must partition the target")

    def digit_level(self, A: IntervalUnion) -> int:
        return self.l if self.l is not None else int(round(1 / float(A.hi)))

    def evaluate(self, A: IntervalUnion, xs) -> np.ndarray:
        """Mark values at the points ``xs`` of ``A`` (vectorised)."""
        xs = np.asarray(xs, dtype=float)
        if self.kind == NONE:
            return np.zeros_like(xs)
        if self.kind == INTERVAL_CHART:
            a, b = float(A.lo), float(A.hi)
            return np.clip((xs - a) / (b - a), 0.0, 1.0)
        if self.kind in (DIGIT_THRESHOLD, DIGIT_RESIDUE):
            with np.errstate(divide="ignore"):
                digits = np.floor(1.0 / xs)
            if self.kind == DIGIT_RESIDUE:
                return np.mod(digits, self.m)
            # digit >= l/theta, with a guard against l/theta landing a hair above an integer
            thr = math.ceil(self.digit_level(A) / self.theta - 1e-9)
            return (digits >= thr).astype(float)
        out = np.full(xs.shape, -1.0)
        for j, part in enumerate(self.parts):
            out[part.contains_array(xs)] = j
        return out

    def __call__(self, A: IntervalUnion, x: float) -> float:
        return float(self.evaluate(A, np.array([x]))[0])


# -- single orbit records -----------------------------------------------------


@dataclass
class HitSample:
    """Consecutive hits of one orbit.

    ``raw_times`` are cumulative step counts of the first hits, ``marks`` the
    observable at each hit position. ``mark0`` is set when the start point
    itself lies in the target.
    """

    raw_times: list
    marks: list
    start_in_A: bool = False
    mark0: float | None = None
    overflow: bool = False

    def __post_init__(self):
        if len(self.raw_times) != len(self.marks):
            raise ValueError("one mark per hit required")
        if any(b <= a for a, b in zip(self.raw_times, self.raw_times[1:])) or any(t < 1 for t in self.raw_times[:1]):
            raise ValueError("hit times must be positive and strictly increasing")

    @property
    def gaps(self) -> list:
        return [b - a for a, b in zip([0] + list(self.raw_times), self.raw_times)]


def normalize_times(sample: HitSample, mu_A: float) -> list:
    """Gaps between consecutive hits, scaled by ``mu(A)``."""
    if not mu_A > 0:
        raise ValueError("mu_A must be positive")
    return [g * mu_A for g in sample.gaps]


def count_from_sample(sample: HitSample, t: float, mu_A: float) -> int:
    """Visits among the first ``floor(t / mu(A))`` steps, read off a hit record."""
    n = math.floor(t / mu_A)
    return sum(1 for r in sample.raw_times if r <= n)


def spatiotemporal_points(sample: HitSample, mu_A: float) -> list:
    """Points ``(mu(A) * cumulative hit time, mark)``."""
    return [(r * mu_A, m) for r, m in zip(sample.raw_times, sample.marks)]


# -- kernel plumbing ----------------------------------------------------------


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("RARELAB_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def run_chunked(fn: Callable[[int, int], None], n: int, threads: int | None = None, min_chunk: int = 1024) -> None:
    """Call ``fn(start, stop)`` over a partition of ``range(n)``, possibly in parallel.

    The kernels are per-sample pure and write disjoint slices, so results do
    not depend on the chunking.
    """
    threads = resolve_threads(threads)
    nchunks = min(threads * 4, max(1, n // min_chunk))
    if threads == 1 or nchunks == 1:
        fn(0, n)
        return
    bounds = np.linspace(0, n, nchunks + 1).astype(int)
    with ThreadPoolExecutor(threads) as ex:
        list(ex.map(lambda ab: fn(*ab), zip(bounds[:-1], bounds[1:])))


@dataclass
class Starts:
    """Start points for a batch; ``w0`` is the binary window used by doubling orbits."""

    x0: np.ndarray
    w0: np.ndarray
    seeds: np.ndarray
    use_tail: bool = True

    def __len__(self):
        return self.x0.size

    @classmethod
    def from_points(cls, sys: SystemSpec, xs, seeds=None, use_tail: bool = False) -> "Starts":
        xs = np.ascontiguousarray(xs, dtype=float)
        w0 = np.array([K.float_to_window(x) for x in xs], dtype=np.uint64)
        if seeds is None:
            seeds = np.zeros(xs.size, dtype=np.uint64)
        return cls(xs, w0, np.asarray(seeds, dtype=np.uint64), use_tail)


def _arrays(A: IntervalUnion):
    return A.arrays()


def push_forward(sys: SystemSpec, starts: Starts, nsteps: int, threads: int | None = None) -> Starts:
    """Iterate every start point ``nsteps`` times."""
    n = len(starts)
    xout = np.empty(n)
    wout = np.empty(n, dtype=np.uint64)
    status = np.zeros(n, dtype=np.int8)
    prm = sys.kernel_params

    def work(a, b):
        K.push_batch(sys.code, prm, starts.x0[a:b], starts.w0[a:b], starts.seeds[a:b], starts.use_tail, nsteps,
                     xout[a:b], wout[a:b], status[a:b])

    run_chunked(work, n, threads)
    if np.any(status == K.GAUSS_ZERO):
        raise GaussAtZero("orbit reached the Gauss digit floor")
    # the tail stream has advanced; reseed deterministically from the old seed
    seeds = starts.seeds * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
    return Starts(xout, wout, seeds, starts.use_tail)


def _piece_sampler(sys: SystemSpec, A: IntervalUnion):
    """Exact inverse-CDF sampling restricted to ``A`` (closed-form measures)."""
    lo = np.array([float(iv.lo) for iv in A.intervals])
    hi = np.array([float(iv.hi) for iv in A.intervals])
    clo, chi = invariant_cdf(sys, lo), invariant_cdf(sys, hi)
    w = np.cumsum(chi - clo)
    w /= w[-1]
    return lo, hi, clo, chi, w


def sample_starts(sys: SystemSpec, measure: str, n: int, master_seed: int, target: IntervalUnion | None = None,
                  offset: int = 0, burn_in: int = DEFAULT_BURN_IN, threads: int | None = None,
                  max_rounds: int = 100_000) -> Starts:
    """Draw ``n`` start points, sample ``i`` from RNG stream ``offset + i``.

    Args:
        measure: ``"mu"`` (invariant measure), ``"mu_A"`` (invariant measure
            conditioned on ``target``), ``"linear"`` (density 2x) or
            ``"lebesgue"``.
        burn_in: push-forward length used to sample the intermittent map's
            invariant measure.
        max_rounds: rejection rounds allowed for ``mu_A`` on the intermittent map.
    """
    if measure not in MEASURES:
        raise ValueError(f"unknown start measure {measure!r}")
    if measure == MU_A and target is None:
        raise ValueError("mu_A sampling needs a target")
    gens = stream_generators(master_seed, n, offset)
    seeds = np.array([g.integers(0, 2**64, dtype=np.uint64) for g in gens], dtype=np.uint64)
    x0 = np.empty(n)
    w0 = np.zeros(n, dtype=np.uint64)
    doubling = sys.kind == DOUBLING

    if sys.kind == INTERMITTENT and measure in (MU, MU_A):
        def draw(idx):
            for i in idx:
                u = gens[i].random()
                while u == 0.0:
                    u = gens[i].random()
                x0[i] = u
            sub = Starts(np.ascontiguousarray(x0[idx]), w0[idx], seeds[idx], False)
            x0[idx] = push_forward(sys, sub, burn_in, threads).x0

        pending = np.arange(n)
        for _ in range(max_rounds):
            draw(pending)
            if measure == MU:
                break
            pending = pending[~target.contains_array(x0[pending])]
            if pending.size == 0:
                break
        else:
            raise RuntimeError("rejection sampling of mu_A did not finish")
        return Starts(x0, w0, seeds, True)

    if measure == MU_A:
        lo, hi, clo, chi, w = _piece_sampler(sys, target)
        for i, g in enumerate(gens):
            while True:
                j = int(np.searchsorted(w, g.random(), side="right"))
                j = min(j, len(w) - 1)
                if doubling:
                    wl = math.ceil(target.intervals[j].lo * 2**64)
                    wh = math.ceil(target.intervals[j].hi * 2**64)
                    wi = int(g.integers(wl, wh)) if wh > wl else wl
                    w0[i] = np.uint64(min(wi, 2**64 - 1))
                    x = float(K.window_to_float(w0[i]))
                else:
                    x = float(invariant_quantile(sys, clo[j] + g.random() * (chi[j] - clo[j])))
                if target.contains(x) and not (sys.kind == GAUSS and x < GAUSS_FLOOR):
                    x0[i] = x
                    break
        if not doubling:
            w0[:] = [K.float_to_window(x) for x in x0]
        return Starts(x0, w0, seeds, True)

    for i, g in enumerate(gens):
        if doubling and measure in (MU, LEBESGUE):
            w0[i] = g.integers(0, 2**64, dtype=np.uint64)
            x0[i] = K.window_to_float(w0[i])
            continue
        while True:
            u = g.random()
            if measure == LINEAR:
                x = math.sqrt(u)
            elif measure == LEBESGUE:
                x = u
            else:
                x = float(invariant_quantile(sys, u))
            if x > 0 and not (sys.kind == GAUSS and x < GAUSS_FLOOR):
                break
        x0[i] = x
        if doubling:
            w0[i] = K.float_to_window(x)
    return Starts(x0, w0, seeds, True)


@dataclass
class HitBatch:
    """Hit records of a batch of orbits; row ``i`` belongs to start point ``i``."""

    times: np.ndarray  # (n, k) cumulative raw hit times, valid up to nhits
    pos: np.ndarray  # (n, k) hit positions
    nhits: np.ndarray
    status: np.ndarray
    x0: np.ndarray
    marks: np.ndarray | None = None
    mark0: np.ndarray | None = None
    start_in_A: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.times.shape[1]

    @property
    def complete(self) -> np.ndarray:
        return self.nhits == self.k

    @property
    def overflow_count(self) -> int:
        return int(np.count_nonzero(~self.complete))

    def gaps(self) -> np.ndarray:
        """Raw gaps of the complete rows, shape ``(n_complete, k)``."""
        t = self.times[self.complete]
        return np.diff(t, axis=1, prepend=0)

    def sample(self, i: int) -> HitSample:
        n = int(self.nhits[i])
        marks = [] if self.marks is None else self.marks[i, :n].tolist()
        inA = bool(self.start_in_A[i]) if self.start_in_A is not None else False
        m0 = float(self.mark0[i]) if (inA and self.mark0 is not None) else None
        return HitSample(self.times[i, :n].tolist(), marks, inA, m0, n < self.k)


def default_cap(A: IntervalUnion, multiplier: float = DEFAULT_CAP_MULTIPLIER) -> int:
    mu = A.mu_mass
    if not mu > 0:
        raise ValueError("target mass unknown; pass an explicit cap")
    return max(1, math.ceil(multiplier / mu))


def run_hits(sys: SystemSpec, A: IntervalUnion, starts: Starts, k: int, cap: int | None = None,
             obs: ObservableSpec | None = None, threads: int | None = None) -> HitBatch:
    """First ``k`` hits of ``A`` along every start orbit, with marks."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cap = default_cap(A) if cap is None else int(cap)
    n = len(starts)
    times = np.zeros((n, k), dtype=np.int64)
    pos = np.zeros((n, k))
    nhits = np.zeros(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    lo, hi, loc, hic = _arrays(A)
    prm = sys.kernel_params

    def work(a, b):
        K.hit_batch(sys.code, prm, lo, hi, loc, hic, starts.x0[a:b], starts.w0[a:b], starts.seeds[a:b],
                    starts.use_tail, k, cap, times[a:b], pos[a:b], nhits[a:b], status[a:b])

    run_chunked(work, n, threads)
    if np.any(status == K.GAUSS_ZERO):
        raise GaussAtZero("orbit reached the Gauss digit floor")
    obs = obs or ObservableSpec()
    inA = A.contains_array(starts.x0)
    return HitBatch(times, pos, nhits, status, starts.x0, obs.evaluate(A, pos), obs.evaluate(A, starts.x0), inA)


def run_counts(sys: SystemSpec, A: IntervalUnion, starts: Starts, nsteps: int, threads: int | None = None) -> np.ndarray:
    """Visits to ``A`` among steps ``1..nsteps`` for every start orbit."""
    n = len(starts)
    counts = np.zeros(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    lo, hi, loc, hic = _arrays(A)
    prm = sys.kernel_params

    def work(a, b):
        K.count_batch(sys.code, prm, lo, hi, loc, hic, starts.x0[a:b], starts.w0[a:b], starts.seeds[a:b],
                      starts.use_tail, nsteps, counts[a:b], status[a:b])

    run_chunked(work, n, threads)
    if np.any(status == K.GAUSS_ZERO):
        raise GaussAtZero("orbit reached the Gauss digit floor")
    return counts


# -- scalar API -------------------------------------------------------------------


def _single(sys: SystemSpec, x: float) -> Starts:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if sys.kind == GAUSS and x == 0:
        raise GaussAtZero("the Gauss map is undefined at 0")
    return Starts.from_points(sys, [float(x)])


def collect_hit_sample(sys: SystemSpec, A: IntervalUnion, obs: ObservableSpec | None, x: float, k: int, cap: int,
                       strict: bool = True) -> HitSample:
    """The first ``k`` hits of ``A`` along the orbit of ``x``.

    Without a hit within ``cap`` steps of the previous one, raises
    :class:`HittingOverflow` carrying the partial record, or returns that
    record (flagged) when ``strict`` is false.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    batch = run_hits(sys, A, _single(sys, x), k, cap, obs, threads=1)
    sample = batch.sample(0)
    if sample.overflow and strict:
        raise HittingOverflow(f"fewer than {k} hits within cap {cap}", partial=sample)
    return sample


def first_hitting_time(sys: SystemSpec, A: IntervalUnion, x: float, cap: int) -> int:
    """Smallest ``n`` in ``[1, cap]`` with ``T^n x`` in ``A``."""
    return collect_hit_sample(sys, A, None, x, 1, cap).raw_times[0]


def counting_marginal(sys: SystemSpec, A: IntervalUnion, x: float, t: float, mu_A: float) -> int:
    """Number of visits to ``A`` among the first ``floor(t / mu(A))`` steps."""
    if t < 0 or not mu_A > 0:
        raise ValueError("need t >= 0 and mu_A > 0")
    nsteps = math.floor(t / mu_A)
    if nsteps == 0:
        return 0
    return int(run_counts(sys, A, _single(sys, x), nsteps, threads=1)[0])
