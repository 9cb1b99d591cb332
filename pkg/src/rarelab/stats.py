"""Empirical laws, discrepancy measures, Birkhoff measure estimates and the Monte Carlo driver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from . import processes as P
from .dynsys import DOUBLING, SystemSpec
from .empirical import EmpiricalLaw
from .errors import TooManyOverflows
from .intervals import IntervalUnion
from .limits import LimitLawSpec
from .rare_events import RareFamilySpec, make_target
from .rng import SeededRng

KS_CONST = 1.36  # asymptotic 95% point of the Kolmogorov distribution
COUNT_CUTOFF = 25
MAX_OVERFLOW_FRACTION = 1e-6

__all__ = [
    "EmpiricalLaw", "ecdf_eval", "ks_distance", "ks_two_sample", "tv_discrete", "pair_dependence",
    "quantile_cells", "value_cells", "estimate_measures", "estimate_measure", "run_monte_carlo", "MonteCarloResult",
]


def ecdf_eval(law: EmpiricalLaw, t_vector) -> float:
    return law.cdf(t_vector)


def ks_distance(law: EmpiricalLaw | np.ndarray, oracle: LimitLawSpec) -> float:
    """Sup of ``|F_n - F|`` over both sides of every jump of the empirical CDF."""
    if not isinstance(law, EmpiricalLaw):
        law = EmpiricalLaw(law)
    if law.dim != 1:
        raise ValueError("ks_distance needs a one-dimensional law")
    x = law.axis(0)
    v, first = np.unique(x, return_index=True)
    n = x.size
    left = first / n  # F_n(v-)
    right = np.append(first[1:], n) / n  # F_n(v)
    d_right = np.abs(right - oracle.cdf_array(v))
    d_left = np.abs(left - oracle.cdf_left_array(v))
    return float(min(1.0, max(d_right.max(), d_left.max())))


def ks_two_sample(a, b) -> float:
    """Sup distance between two empirical CDFs."""
    a, b = np.sort(np.ravel(a)), np.sort(np.ravel(b))
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def histogram(values, K: int = COUNT_CUTOFF) -> np.ndarray:
    """Counts of ``0..K`` followed by one bucket for values above ``K``."""
    values = np.asarray(values, dtype=np.int64)
    if np.any(values < 0):
        raise ValueError("counts must be nonnegative")
    return np.bincount(np.minimum(values, K + 1), minlength=K + 2)


def tv_discrete(counts, oracle_pmf: Callable[[int], float] | LimitLawSpec, K: int = COUNT_CUTOFF,
                n: int | None = None) -> float:
    """Total variation between a histogram on ``0..K`` and a pmf, tails folded into one cell.

    Args:
        counts: histogram; entries beyond index ``K`` count as tail.
        n: total number of observations if not all of them appear in ``counts``.
    """
    counts = np.asarray(counts, dtype=float)
    n = counts.sum() if n is None else n
    if n <= 0:
        raise ValueError("empty histogram")
    pmf = oracle_pmf.pmf if isinstance(oracle_pmf, LimitLawSpec) else oracle_pmf
    head = counts[: K + 1]
    head = np.pad(head, (0, K + 1 - head.size))
    p = np.array([pmf(k) for k in range(K + 1)])
    emp = head / n
    return float(0.5 * (np.abs(emp - p).sum() + abs((1 - emp.sum()) - max(1 - p.sum(), 0.0))))


def quantile_cells(values, q: int = 4) -> Callable[[np.ndarray], np.ndarray]:
    """Partitioner into the ``q`` quantile cells of ``values``."""
    edges = np.quantile(np.asarray(values, dtype=float), np.arange(1, q) / q)
    return lambda v: np.searchsorted(edges, np.asarray(v, dtype=float), side="right")


def value_cells(v) -> np.ndarray:
    """Partitioner with one cell per distinct value (for discrete marks)."""
    return np.unique(np.asarray(v), return_inverse=True)[1]


def pair_dependence(marks_a, marks_b, partitioner="quartiles") -> float:
    """Max over cell pairs of ``|P(a in i, b in j) - P(a in i) P(b in j)|``.

    ``partitioner`` is a callable (applied to both samples), ``"quartiles"``
    (quartiles of each sample separately) or ``"values"`` (distinct values).
    """
    a, b = np.asarray(marks_a), np.asarray(marks_b)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("need two nonempty samples of equal length")
    if partitioner == "quartiles":
        ca, cb = quantile_cells(a)(a), quantile_cells(b)(b)
    elif partitioner == "values":
        ca, cb = value_cells(a), value_cells(b)
    else:
        ca, cb = np.asarray(partitioner(a)), np.asarray(partitioner(b))
    ca = np.unique(ca, return_inverse=True)[1]
    cb = np.unique(cb, return_inverse=True)[1]
    joint = np.zeros((ca.max() + 1, cb.max() + 1))
    np.add.at(joint, (ca, cb), 1.0)
    joint /= a.size
    return float(np.max(np.abs(joint - np.outer(joint.sum(1), joint.sum(0)))))


def product_ecdf_distance(law: EmpiricalLaw, oracle: LimitLawSpec, probs=np.arange(1, 10) / 10) -> float:
    """Sup over a quantile grid of ``|F_n(s, t) - F(s) F(t)|`` for a two-dimensional law."""
    if law.dim != 2:
        raise ValueError("need a two-dimensional law")
    s = law.samples
    g0, g1 = np.quantile(s[:, 0], probs), np.quantile(s[:, 1], probs)
    worst = 0.0
    for t0 in g0:
        m0 = s[:, 0] <= t0
        for t1 in g1:
            emp = np.mean(m0 & (s[:, 1] <= t1))
            worst = max(worst, abs(emp - oracle.cdf(t0) * oracle.cdf(t1)))
    return float(worst)


# -- Monte Carlo error formulas ------------------------------------------------------


def ks_mc_err(n: int) -> float:
    """95% Kolmogorov band ``1.36 / sqrt(n)``."""
    return KS_CONST / math.sqrt(n)


def ks2_mc_err(n1: int, n2: int) -> float:
    """Two-sample band ``1.36 sqrt(1/n1 + 1/n2)``."""
    return KS_CONST * math.sqrt(1 / n1 + 1 / n2)


def mean_mc_err(n: int) -> float:
    """Standard error of a mean of unit-variance (exponential) samples."""
    return 1 / math.sqrt(n)


def pair_mc_err(n: int) -> float:
    """Largest standard deviation of a cell frequency, ``sqrt(1/4 / n)``."""
    return 0.5 / math.sqrt(n)


def tv_mc_err(pmf_values, n: int) -> float:
    """Half the summed binomial standard deviations of the histogram cells."""
    p = np.asarray(pmf_values, dtype=float)
    return float(0.5 * np.sum(np.sqrt(p * (1 - p) / n)))


# -- invariant measure by Birkhoff averages --------------------------------------------------


def estimate_measures(sys: SystemSpec, sets: list[IntervalUnion], n_steps: int = 10**8, burn_in: int = 10**4,
                      seed: int | SeededRng = 0, n_batches: int = 100) -> list[tuple[float, float]]:
    """Visit frequencies of one long orbit, with batch-means standard errors.

    Returns ``(estimate, std_err)`` per set.
    """
    if n_steps < n_batches or n_batches < 2:
        raise ValueError("need n_steps >= n_batches >= 2")
    rng = seed if isinstance(seed, SeededRng) else SeededRng(int(seed))
    gen = rng.generator()
    x = gen.random()
    while x == 0.0:
        x = gen.random()
    w = gen.integers(0, 2**64, dtype=np.uint64) if sys.kind == DOUBLING else K.float_to_window(x)
    if sys.kind == DOUBLING:
        x = K.window_to_float(w)
    tail_seed = gen.integers(0, 2**64, dtype=np.uint64)
    arrs = [s.arrays() for s in sets]
    lo, hi, loc, hic = (np.concatenate([a[i] for a in arrs]) for i in range(4))
    offsets = np.cumsum([0] + [a[0].size for a in arrs]).astype(np.int64)
    batch_len = n_steps // n_batches
    counts = np.zeros((len(sets), n_batches), dtype=np.int64)
    K.birkhoff_counts(sys.code, sys.kernel_params, lo, hi, loc, hic, offsets, x, w, tail_seed, True, burn_in,
                      n_batches, batch_len, counts)
    freq = counts / batch_len
    return [(float(f.mean()), float(f.std(ddof=1) / math.sqrt(n_batches))) for f in freq]


def estimate_measure(sys: SystemSpec, A: IntervalUnion, **kw) -> IntervalUnion:
    """``A`` with an estimated invariant mass attached."""
    (m, se), = estimate_measures(sys, [A], **kw)
    if not m > 0:
        raise ValueError("the orbit never visited the set; increase n_steps")
    return A.with_mass(m, "estimated", se)


# -- Monte Carlo driver ----------------------------------------------------------------------


@dataclass
class MonteCarloResult:
    """Everything one Monte Carlo run produces.

    ``gaps`` and ``marks`` have one row per complete orbit and one column per
    hit; gaps are normalized by ``mu_A``. ``counts[t]`` is the histogram of
    ``N_{A,t}`` over ``0..K`` plus a tail bucket.
    """

    target: IntervalUnion
    mu_A: float
    measure: str
    seed: int
    n_samples: int
    gaps: np.ndarray
    raw_gaps: np.ndarray
    marks: np.ndarray
    mark0: np.ndarray
    counts: dict = field(default_factory=dict)
    overflow_count: int = 0

    @property
    def n_eff(self) -> int:
        return self.gaps.shape[0]

    @property
    def gap_laws(self) -> dict:
        return {d: EmpiricalLaw(self.gaps[:, :d]) for d in range(1, min(3, self.gaps.shape[1]) + 1)}

    def gap_law(self, d: int = 1) -> EmpiricalLaw:
        return EmpiricalLaw(self.gaps[:, :d])

    @property
    def mark_law(self) -> EmpiricalLaw:
        return EmpiricalLaw(self.marks)

    def joint(self, j: int = 0) -> EmpiricalLaw:
        """Samples of (normalized gap, mark) at hit ``j``."""
        return EmpiricalLaw(np.column_stack([self.gaps[:, j], self.marks[:, j]]))

    def to_dict(self) -> dict:
        return {
            "target": [[repr(float(iv.lo)), repr(float(iv.hi)), iv.lo_closed, iv.hi_closed] for iv in self.target.intervals],
            "mu_A": self.mu_A,
            "measure": self.measure,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "overflow_count": self.overflow_count,
            "gaps": self.gaps.tolist(),
            "marks": self.marks.tolist(),
            "counts": {repr(float(t)): h.tolist() for t, h in self.counts.items()},
        }


def run_monte_carlo(sys: SystemSpec, fam: RareFamilySpec | IntervalUnion, l: int | None,
                    obs: P.ObservableSpec | None, measure_choice: str, n_samples: int, k_hits: int,
                    rng: SeededRng | int, t_values=(), cap_multiplier: float = P.DEFAULT_CAP_MULTIPLIER,
                    K_cut: int = COUNT_CUTOFF, threads: int | None = None, burn_in: int = P.DEFAULT_BURN_IN,
                    measure_steps: int = 10**7, max_overflow: float = MAX_OVERFLOW_FRACTION,
                    stream_offset: int = 0) -> MonteCarloResult:
    """Sample start points, record ``k_hits`` hits of ``A_l`` along each orbit and summarise.

    Sample ``i`` uses RNG stream ``i`` of the master seed, so results depend
    only on the seed and the configuration. Targets without a closed-form
    mass get a Birkhoff estimate over ``measure_steps`` steps.

    Raises:
        TooManyOverflows: when more than ``max_overflow`` of the orbits miss a hit.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    seed = rng.master_seed if isinstance(rng, SeededRng) else int(rng)
    A = fam if isinstance(fam, IntervalUnion) else make_target(fam, l)
    if A.mass_kind == "unknown":
        A = estimate_measure(sys, A, n_steps=measure_steps, burn_in=burn_in, seed=SeededRng(seed, 2**63))
    obs = obs or P.ObservableSpec()
    obs.validate(sys, A)
    mu = A.mu_mass
    starts = P.sample_starts(sys, measure_choice, n_samples, seed, target=A, offset=stream_offset, burn_in=burn_in,
                             threads=threads)
    batch = P.run_hits(sys, A, starts, k_hits, P.default_cap(A, cap_multiplier), obs, threads)
    overflows = batch.overflow_count
    if overflows > max_overflow * n_samples:
        raise TooManyOverflows(f"{overflows} of {n_samples} orbits overflowed")
    ok = batch.complete
    raw = batch.gaps()
    counts = {}
    for t in t_values:
        nsteps = math.floor(t / mu)
        c = P.run_counts(sys, A, starts, nsteps, threads) if nsteps > 0 else np.zeros(n_samples, dtype=np.int64)
        counts[float(t)] = histogram(c, K_cut)
    return MonteCarloResult(A, mu, measure_choice, seed, n_samples, raw * mu, raw, batch.marks[ok], batch.mark0[ok],
                            counts, overflows)
