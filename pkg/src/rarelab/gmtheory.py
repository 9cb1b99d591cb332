"""Numerical checks of Gibbs-Markov structure: distortion, cylinder decay, periodic
extremal indices and Cesaro decay of the transfer operator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .dynsys import DOUBLING, GAUSS, INTERMITTENT, PWL, SystemSpec, cylinder_exact, gauss, interval_measure, invariant_density
from .errors import EmptyCylinder, GridMismatch, NoFixedPoint
from .rng import as_generator

GAUSS_MAX_DIGIT = 50
GAUSS_SYS = gauss()


@dataclass(frozen=True)
class GmConstants:
    """Empirical structure constants: distortion ``r``, big-image bound ``flat`` and decay ``kappa q^n``."""

    r: float
    flat: float
    kappa: float
    q: float

    def __post_init__(self):
        if not (self.r >= 0 and self.flat > 0 and self.kappa > 0 and 0 < self.q < 1):
            raise ValueError("need r >= 0, flat > 0, kappa > 0 and 0 < q < 1")


def _check_gm(sys: SystemSpec):
    if sys.kind == INTERMITTENT:
        raise ValueError("the intermittent map is not Gibbs-Markov (neutral fixed point)")


def _gauss_matrix(word):
    # v_w(y) = (a y + b) / (c y + d)
    a, b, c, d = 1, 0, 0, 1
    for k in word:
        a, b, c, d = b, a + k * b, d, c + k * d
    return a, b, c, d


def _finite_words(sys: SystemSpec, n: int):
    """Admissible words of length ``n`` with their cylinders."""
    level = []
    for i in sys.branch_indices():
        level.append(([i], cylinder_exact(sys, [i])))
    for _ in range(n - 1):
        nxt = []
        for w, _ in level:
            for i in sys.branch_indices():
                try:
                    nxt.append((w + [i], cylinder_exact(sys, w + [i])))
                except EmptyCylinder:
                    continue
        level = nxt
    return level


def _image_of_word(sys: SystemSpec, word):
    """``T^n Z`` for the cylinder of ``word`` (a PWL image cell range, else the unit interval)."""
    if sys.kind != PWL:
        return 0.0, 1.0
    Z = cylinder_exact(sys, word)
    lo, hi = Z.lo, Z.hi
    for i in word:
        a, b = sys.params[1][i]
        p0, s = sys.params[0][i], sys.slopes[i]
        lo, hi = a + (lo - p0) * s, a + (hi - p0) * s
    return float(lo), float(hi)


def _inverse_derivative_along(sys: SystemSpec, word, y: float) -> float:
    # chain rule for v_{w0} o ... o v_{w_{n-1}} at y, innermost branch first
    der = 1.0
    for i in reversed(word):
        der *= abs(sys.inverse_derivative(i, y))
        y = float(sys.inverse_branch(i, y))
    return der


def distortion_by_rank(sys: SystemSpec, max_rank: int, pairs_per_cylinder: int = 8, rng=0,
                       words_per_rank: int = 200) -> dict[int, float]:
    """Max of ``|v_Z'(x) / v_Z'(y) - 1| / |x - y|`` per rank.

    Every cylinder contributes the endpoint pair of ``T^n Z`` plus random
    pairs. Gauss cylinders are sampled with digits up to 50 (the rank-1
    digits are all scanned); finite maps enumerate every cylinder.
    """
    _check_gm(sys)
    gen = as_generator(rng)
    out = {}
    for n in range(1, max_rank + 1):
        if sys.kind == GAUSS:
            if n == 1:
                words = [[k] for k in range(1, GAUSS_MAX_DIGIT + 1)]
            else:
                words = [[1] * n] + [list(gen.integers(1, GAUSS_MAX_DIGIT + 1, size=n)) for _ in range(words_per_rank)]
        else:
            words = [w for w, _ in _finite_words(sys, n)]
        worst = 0.0
        for w in words:
            lo, hi = _image_of_word(sys, w)
            pts = [(lo, hi), (hi, lo)] + [tuple(gen.uniform(lo, hi, size=2)) for _ in range(pairs_per_cylinder)]
            if sys.kind == GAUSS:
                a, b, c, d = _gauss_matrix(w)
                der = lambda y: 1.0 / (c * y + d) ** 2  # noqa: E731  |det| = 1
            else:
                der = lambda y: _inverse_derivative_along(sys, w, y)  # noqa: E731
            for x, y in pts:
                if x == y:
                    continue
                worst = max(worst, abs(der(x) / der(y) - 1.0) / abs(x - y))
        out[n] = worst
    return out


def distortion_scan(sys: SystemSpec, max_rank: int, pairs_per_cylinder: int = 8, rng=0) -> float:
    """Largest sampled distortion quotient over ranks ``1..max_rank``."""
    if sys.kind == GAUSS and max_rank > 8:
        raise ValueError("Gauss scans are limited to rank 8")
    return max(distortion_by_rank(sys, max_rank, pairs_per_cylinder, rng).values())


def _pushed_log_density(sys: SystemSpec, word, y: float) -> float:
    """``log`` of the ``mu``-density of ``T^n_* mu_Z`` at ``y``, up to the constant ``-log mu(Z)``."""
    x = y
    for i in reversed(word):
        x = float(sys.inverse_branch(i, x))
    h_ratio = float(invariant_density(sys, x)) / float(invariant_density(sys, y))
    return math.log(_inverse_derivative_along(sys, word, y) * h_ratio)


def pushforward_regularity(sys: SystemSpec, max_rank: int = 4, pairs_per_cylinder: int = 8, rng=0,
                           words_per_rank: int = 200) -> dict[int, float]:
    """Largest sampled log-Lipschitz quotient of the densities ``d T^n_* mu_Z / d mu`` per rank.

    ``Z`` runs over rank-``n`` cylinders and pairs are drawn inside a single
    partition cell of ``T^n Z``. Piecewise linear maps give 0 up to rounding,
    since both the branch derivative and the density are constant on cells.
    Gauss is limited to rank 4 with words sampled as in :func:`distortion_by_rank`.
    """
    _check_gm(sys)
    if sys.kind == GAUSS and max_rank > 4:
        raise ValueError("Gauss regularity scans are limited to rank 4")
    gen = as_generator(rng)
    out = {}
    for n in range(1, max_rank + 1):
        if sys.kind == GAUSS:
            words = [[1] * n] + [list(gen.integers(1, GAUSS_MAX_DIGIT + 1, size=n)) for _ in range(words_per_rank)]
            cells = [(1.0 / (k + 1), 1.0 / k) for k in range(1, GAUSS_MAX_DIGIT + 1)]
        else:
            words = [w for w, _ in _finite_words(sys, n)]
            cells = [(float(iv.lo), float(iv.hi)) for iv in sys.partition]
        worst = 0.0
        for w in words:
            lo, hi = _image_of_word(sys, w)
            for a, b in cells:
                a, b = max(a, lo), min(b, hi)
                if not b > a:
                    continue
                # stay off the cell edges, where float rounding can pick the neighbouring branch
                pad = 1e-9 * (b - a)
                for x, y in gen.uniform(a + pad, b - pad, size=(pairs_per_cylinder, 2)):
                    if x != y:
                        q = abs(_pushed_log_density(sys, w, x) - _pushed_log_density(sys, w, y)) / abs(x - y)
                        worst = max(worst, float(q))
        out[n] = worst
    return out


# -- periodic points -----------------------------------------------------------------------


def periodic_point(sys: SystemSpec, word: Sequence[int], tol: float = 1e-15) -> float:
    """Fixed point of the inverse-branch composition ``v_{w0} o ... o v_{w_{p-1}}``."""
    _check_gm(sys)
    word = list(word)
    try:
        C = cylinder_exact(sys, word + word)
    except EmptyCylinder as exc:
        raise NoFixedPoint(f"word {word} is not cyclically admissible") from exc

    def v(y):
        for i in reversed(word):
            y = sys.inverse_branch(i, y)
        return y

    if sys.kind in (DOUBLING, PWL):
        # affine contraction: solve exactly
        y0 = v(Fraction(0))
        slope = v(Fraction(1)) - y0
        x = y0 / (1 - slope)
    else:
        x = float(C.lo + C.hi) / 2
        for _ in range(200):
            nx = float(v(x))
            if abs(nx - x) < tol:
                x = nx
                break
            x = nx
        # one Newton polish on g(x) = v(x) - x
        dv = _inverse_derivative_along(sys, word, x) * (-1) ** sum(1 for i in word if not sys.is_increasing(i))
        x = x - (float(v(x)) - x) / (dv - 1.0)
    if sys.kind in (DOUBLING, PWL):
        inside = C.contains(x)
    else:
        # the doubled-word cylinder can be narrower than a float ulp, so check one period
        C1 = cylinder_exact(sys, word)
        inside = float(C1.lo) <= x <= float(C1.hi)
    if not inside:
        raise NoFixedPoint(f"the composition for {word} has no fixed point in its cylinder")
    return float(x)


def theta_at_periodic(sys: SystemSpec, word: Sequence[int]) -> float:
    """``1 - v'(x*)`` at the periodic point with itinerary ``word`` repeated.

    Because ``v(x*) = x*``, the density ratio in the derivative with respect
    to the invariant measure cancels, so the Lebesgue derivative is used.
    """
    word = list(word)
    x = periodic_point(sys, word)
    if sys.kind in (DOUBLING, PWL):
        der = Fraction(1)
        for i in word:
            der /= sys.slopes[i] if sys.kind == PWL else 2
        return float(1 - der)
    return 1.0 - _inverse_derivative_along(sys, word, x)


def theta_density_form(sys: SystemSpec, word: Sequence[int]) -> float:
    """Same quantity through ``v_lambda'(x*) h(v(x*)) / h(x*)`` (Gauss density ``1/(1+x)``)."""
    word = list(word)
    x = periodic_point(sys, word)
    y = x
    for i in reversed(word):
        y = float(sys.inverse_branch(i, y))
    ratio = float(invariant_density(sys, y)) / float(invariant_density(sys, x))
    return 1.0 - _inverse_derivative_along(sys, word, x) * ratio


# -- cylinder decay -------------------------------------------------------------------------


def _gauss_max_cylinders(ranks) -> dict[int, float]:
    # branch and bound: a child never outweighs its parent
    top = max(ranks)
    best = {n: interval_measure(GAUSS_SYS, cylinder_exact(GAUSS_SYS, [1] * n)) for n in range(1, top + 1)}
    stack = [[k] for k in range(1, GAUSS_MAX_DIGIT + 1)]
    while stack:
        w = stack.pop()
        m = interval_measure(GAUSS_SYS, cylinder_exact(GAUSS_SYS, w))
        n = len(w)
        if m > best[n]:
            best[n] = m
        if n < top and m > best[n + 1]:
            stack.extend(w + [k] for k in range(1, GAUSS_MAX_DIGIT + 1))
    return {n: best[n] for n in ranks}


def max_cylinder_measures(sys: SystemSpec, ranks) -> dict[int, float]:
    _check_gm(sys)
    ranks = list(ranks)
    if sys.kind == GAUSS:
        return _gauss_max_cylinders(ranks)
    return {n: max(interval_measure(sys, Z) for _, Z in _finite_words(sys, n)) for n in ranks}


class DecayFit(NamedTuple):
    kappa: float
    q: float


def _fit(ranks, masses):
    # least squares of log2 mass on rank, in exact rational arithmetic
    xs = [Fraction(n) for n in ranks]
    ys = [Fraction(math.log2(m)) for m in masses]
    k = len(xs)
    mx, my = sum(xs) / k, sum(ys) / k
    sxx = sum((x - mx) ** 2 for x in xs)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    icpt = my - slope * mx
    res = [float(y - icpt - slope * x) * math.log(2) for x, y in zip(xs, ys)]
    return 2.0 ** float(icpt), 2.0 ** float(slope), res


def cylinder_decay_fit(sys: SystemSpec, ranks) -> DecayFit:
    """Fit ``max_Z mu(Z) ~ kappa q^n`` over the ranks."""
    ranks = list(ranks)
    if len(ranks) < 2 or any(b != a + 1 for a, b in zip(ranks, ranks[1:])):
        raise ValueError("ranks must be a contiguous range of length >= 2")
    mx = max_cylinder_measures(sys, ranks)
    kappa, q, _ = _fit(ranks, [mx[n] for n in ranks])
    return DecayFit(kappa, q)


def decay_fit_residuals(sys: SystemSpec, ranks) -> list[float]:
    """Per-rank residuals (natural log) of :func:`cylinder_decay_fit`."""
    ranks = list(ranks)
    mx = max_cylinder_measures(sys, ranks)
    return _fit(ranks, [mx[n] for n in ranks])[2]


def big_image_bound(sys: SystemSpec) -> float:
    """``inf_Z mu(T Z)`` over the rank-one partition."""
    _check_gm(sys)
    if sys.kind != PWL:
        return 1.0
    return min(interval_measure(sys, sys.image(i)) for i in sys.branch_indices())


def gm_constants(sys: SystemSpec, max_rank: int = 6, rng=0) -> GmConstants:
    scan = distortion_scan(sys, max_rank, rng=rng)
    kappa, q = cylinder_decay_fit(sys, range(1, max_rank + 1))
    return GmConstants(math.log1p(scan), big_image_bound(sys), kappa, q)


# -- transfer operator -----------------------------------------------------------------------


def exact_stationary_density(sys: SystemSpec) -> list[Fraction]:
    """PWL invariant density per partition cell, solved in rational arithmetic."""
    breaks, images = sys.params
    m = len(images)
    lengths = [breaks[j + 1] - breaks[j] for j in range(m)]
    # unknown h; equations (P h)_j - h_j = 0 for j < m-1, plus normalisation
    A = [[Fraction(0)] * m for _ in range(m)]
    rhs = [Fraction(0)] * m
    for j in range(m):
        for i, (a, b) in enumerate(images):
            if a <= breaks[j] and breaks[j + 1] <= b:
                A[j][i] += 1 / sys.slopes[i]
        A[j][j] -= 1
    A[-1] = list(lengths)
    rhs[-1] = Fraction(1)
    # Gauss-Jordan elimination
    for col in range(m):
        piv = next(r for r in range(col, m) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
                rhs[r] -= f * rhs[col]
    return [rhs[j] / A[j][j] for j in range(m)]


def _transfer_step(sys: SystemSpec, f: list, h=None) -> list:
    if sys.kind == DOUBLING:
        N = len(f)
        return [(f[j // 2] + f[j // 2 + N // 2]) / 2 for j in range(N)]
    breaks, images = sys.params
    m = len(images)
    out = []
    for j in range(m):
        s = Fraction(0)
        for i, (a, b) in enumerate(images):
            if a <= breaks[j] and breaks[j + 1] <= b:
                s += f[i] * h[i] / sys.slopes[i]
        out.append(s / h[j])
    return out


def yosida_average_decay(sys: SystemSpec, u, v, n: int) -> float:
    """``|| (1/n) sum_{k<n} That^k (u - v) ||`` in ``L^1(mu)``, exactly.

    ``u`` and ``v`` are densities with respect to the invariant measure,
    constant on each cell of the grid: ``2^m`` equal cells for the doubling
    map, the Markov partition for a PWL map. ``That`` is the transfer operator
    with respect to the invariant measure, which maps such functions to such
    functions.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u = [Fraction(x) for x in u]
    v = [Fraction(x) for x in v]
    if len(u) != len(v):
        raise GridMismatch("u and v live on different grids")
    h = None
    if sys.kind == DOUBLING:
        N = len(u)
        if N < 2 or N & (N - 1):
            raise GridMismatch("doubling densities need 2^m cells, m >= 1")
        weights = [Fraction(1, N)] * N
    elif sys.kind == PWL:
        if len(u) != len(sys.params[1]):
            raise GridMismatch("PWL densities need one value per partition cell")
        h = exact_stationary_density(sys)
        breaks = sys.params[0]
        weights = [h[j] * (breaks[j + 1] - breaks[j]) for j in range(len(h))]
    else:
        raise ValueError("transfer matrices are exact only for doubling and PWL maps")
    f = [a - b for a, b in zip(u, v)]
    acc = [Fraction(0)] * len(f)
    for k in range(n):
        acc = [a + b for a, b in zip(acc, f)]
        if not any(f):
            break  # remaining iterates vanish
        f = _transfer_step(sys, f, h)
    return float(sum(abs(a) * w for a, w in zip(acc, weights)) / n)

