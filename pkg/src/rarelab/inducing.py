"""First-return maps on a reference set and induced hitting processes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import processes as P
from .dynsys import SystemSpec
from .errors import HittingOverflow, ReturnOverflow
from .intervals import IntervalUnion
from .stats import estimate_measures, ks2_mc_err, ks_two_sample


@dataclass(frozen=True)
class InducedSystem:
    """The first-return map ``T_Y`` of ``base`` on ``Y``; single returns longer than ``return_cap`` overflow."""

    base: SystemSpec
    Y: IntervalUnion
    return_cap: int = 10**7

    def __post_init__(self):
        if self.return_cap < 1:
            raise ValueError("return_cap must be >= 1")
        if self.Y.mass_kind != "unknown" and not self.Y.mu_mass > 0:
            raise ValueError("mu(Y) must be positive")


def _require_in(Y: IntervalUnion, x: float):
    if not Y.contains(x):
        raise ValueError(f"x={x} is not in Y")


def first_return_step(ind: InducedSystem, x: float) -> tuple[float, int]:
    """``(T_Y x, phi_Y(x))``."""
    _require_in(ind.Y, x)
    b = P.run_hits(ind.base, ind.Y, P.Starts.from_points(ind.base, [x]), 1, ind.return_cap, threads=1)
    if b.nhits[0] == 0:
        raise ReturnOverflow(f"no return to Y within {ind.return_cap} steps")
    return float(b.pos[0, 0]), int(b.times[0, 0])


@dataclass
class InducedBatch:
    """Induced hit records; ``rtimes`` are the flat step counts of the same hits."""

    itimes: np.ndarray
    rtimes: np.ndarray
    pos: np.ndarray
    nhits: np.ndarray
    status: np.ndarray
    marks: np.ndarray

    @property
    def complete(self) -> np.ndarray:
        return self.nhits == self.itimes.shape[1]

    @property
    def overflow_count(self) -> int:
        return int(np.count_nonzero(~self.complete))

    def gaps(self) -> np.ndarray:
        return np.diff(self.itimes[self.complete], axis=1, prepend=0)


def run_induced(ind: InducedSystem, A: IntervalUnion, starts: P.Starts, k: int, cap: int,
                obs: P.ObservableSpec | None = None, threads: int | None = None) -> InducedBatch:
    """First ``k`` visits to ``A`` under ``T_Y`` for every start point (all in ``Y``)."""
    if not A.issubset(ind.Y):
        raise ValueError("A must lie inside Y")
    n = len(starts)
    itimes = np.zeros((n, k), dtype=np.int64)
    rtimes = np.zeros((n, k), dtype=np.int64)
    pos = np.zeros((n, k))
    nhits = np.zeros(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    ya, aa = ind.Y.arrays(), A.arrays()
    sys = ind.base

    def work(a, b):
        K.induced_batch(sys.code, sys.kernel_params, *ya, *aa, starts.x0[a:b], starts.w0[a:b], starts.seeds[a:b],
                        starts.use_tail, k, ind.return_cap, cap, itimes[a:b], rtimes[a:b], pos[a:b], nhits[a:b],
                        status[a:b])

    P.run_chunked(work, n, threads)
    obs = obs or P.ObservableSpec()
    return InducedBatch(itimes, rtimes, pos, nhits, status, obs.evaluate(A, pos))


def induced_hit_sample(ind: InducedSystem, A: IntervalUnion, obs: P.ObservableSpec | None, x: float, k: int,
                       cap: int) -> P.HitSample:
    """Hit record of ``A`` under ``T_Y``; times count induced steps."""
    _require_in(ind.Y, x)
    b = run_induced(ind, A, P.Starts.from_points(ind.base, [x]), k, cap, obs, threads=1)
    n = int(b.nhits[0])
    obs = obs or P.ObservableSpec()
    inA = A.contains(x)
    sample = P.HitSample(b.itimes[0, :n].tolist(), b.marks[0, :n].tolist(), inA, obs(A, x) if inA else None, n < k)
    if b.status[0] == K.RETURN_OVERFLOW:
        raise ReturnOverflow(f"no return to Y within {ind.return_cap} steps")
    if sample.overflow:
        raise HittingOverflow(f"fewer than {k} induced hits within cap {cap}", partial=sample)
    return sample


def flat_times_of_induced(ind: InducedSystem, x: float, j: int) -> list[int]:
    """``phi_Y`` along the first ``j`` steps of the induced orbit of ``x``."""
    _require_in(ind.Y, x)
    b = P.run_hits(ind.base, ind.Y, P.Starts.from_points(ind.base, [x]), j, ind.return_cap, threads=1)
    if b.nhits[0] < j:
        raise ReturnOverflow(f"no return to Y within {ind.return_cap} steps")
    return np.diff(b.times[0], prepend=0).tolist()


def time_change_check(sys: SystemSpec, Y: IntervalUnion, x: float, j_steps: int, return_cap: int = 10**7,
                      tail_seed: int | None = 0) -> float:
    """Mean of ``phi_Y`` over the first ``j_steps`` points of the induced orbit of ``x``.

    With ``tail_seed`` set, binary digits past the float's precision (doubling)
    and redraws at the Gauss digit floor come from that seed's stream, so long
    orbits stay typical. ``None`` iterates the float ``x`` itself.
    """
    if j_steps < 1:
        raise ValueError("j_steps must be >= 1")
    _require_in(Y, x)
    if tail_seed is None:
        starts = P.Starts.from_points(sys, [x])
    else:
        starts = P.Starts.from_points(sys, [x], seeds=[tail_seed], use_tail=True)
    b = P.run_hits(sys, Y, starts, j_steps, return_cap, threads=1)
    if b.nhits[0] < j_steps:
        raise ReturnOverflow(f"no return to Y within {return_cap} steps")
    return float(b.times[0, -1]) / j_steps


@dataclass
class InducedComparison:
    ks: float
    mc_err: float
    n_original: int
    n_induced: int
    mu_Y: tuple[float, float]
    mu_A: tuple[float, float]
    identity_checked: int
    identity_violations: int
    mark_violations: int
    overflows: int


def compare_induced(sys: SystemSpec, Y: IntervalUnion, A: IntervalUnion, n: int, seed: int, k: int = 1,
                    measure_steps: int = 10**8, burn_in: int = 10**4, cap_multiplier: float = P.DEFAULT_CAP_MULTIPLIER,
                    obs: P.ObservableSpec | None = None, threads: int | None = None) -> InducedComparison:
    """Normalized hitting gaps of ``A`` under ``mu`` against induced gaps under ``mu_Y``.

    The original process uses ``mu``-distributed starts and is normalized by
    ``mu(A)``; the induced one uses ``mu_Y`` starts, counts ``T_Y`` steps and is
    normalized by ``mu_Y(A) = mu(A) / mu(Y)``. Both masses come from one long
    Birkhoff orbit. On the induced starts the flat orbit is replayed to check
    the time-change identity and the equality of marks hit by hit.
    """
    (mY, seY), (mA, seA) = estimate_measures(sys, [Y, A], n_steps=measure_steps, burn_in=burn_in, seed=seed)
    A = A.with_mass(mA, "estimated", seA)
    muYA = mA / mY
    cap_flat = math.ceil(cap_multiplier / mA)
    cap_ind = math.ceil(cap_multiplier / muYA)
    obs = obs or P.ObservableSpec()

    s_mu = P.sample_starts(sys, P.MU, n, seed, burn_in=burn_in, threads=threads)
    flat = P.run_hits(sys, A, s_mu, k, cap_flat, obs, threads)
    g_flat = flat.gaps()[:, 0] * mA

    s_Y = P.sample_starts(sys, P.MU_A, n, seed, target=Y, offset=n, burn_in=burn_in, threads=threads)
    ind = InducedSystem(sys, Y.with_mass(mY, "estimated", seY), return_cap=cap_flat)
    ib = run_induced(ind, A, s_Y, k, cap_ind, obs, threads)
    g_ind = ib.gaps()[:, 0] * muYA

    replay = P.run_hits(sys, A, s_Y, k, cap_flat, obs, threads)
    both = ib.complete & replay.complete
    bad_t = int(np.count_nonzero(np.any(ib.rtimes[both] != replay.times[both], axis=1)))
    bad_m = int(np.count_nonzero(np.any(ib.marks[both] != replay.marks[both], axis=1)))
    return InducedComparison(
        ks=ks_two_sample(g_flat, g_ind), mc_err=ks2_mc_err(g_flat.size, g_ind.size), n_original=g_flat.size,
        n_induced=g_ind.size, mu_Y=(mY, seY), mu_A=(mA, seA), identity_checked=int(both.sum()),
        identity_violations=bad_t, mark_violations=bad_m, overflows=flat.overflow_count + ib.overflow_count)
