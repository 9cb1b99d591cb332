"""Compiled orbit loops.

Every kernel iterates one orbit per sample and writes into caller-owned
arrays, so a batch can be split across threads without changing any result.

Doubling orbits are carried as a 64-bit window of the binary expansion:
each step shifts the window left and feeds in the next binary digit of the
start point. With ``use_tail`` the digits beyond the window come from a
per-sample splitmix64 stream, which makes the orbit that of a start point
with an independent uniform binary tail; without it the tail is zero (the
exact dyadic rational). Plain float iteration would collapse to 0 after ~53
steps.

Status codes: 0 ok, 1 step cap exceeded, 2 Gauss orbit fell below the digit
floor without a tail stream to redraw from, 3 a single return to the
inducing set exceeded its cap.
"""

import numpy as np
from numba import njit

GAUSS, DOUBLING, PWL, INTERMITTENT = 0, 1, 2, 3
OK, OVERFLOW, GAUSS_ZERO, RETURN_OVERFLOW = 0, 1, 2, 3

GAUSS_FLOOR = 1e-12
_INV53 = 1.0 / 9007199254740992.0
_TWO32 = 4294967296.0
LN2 = 0.6931471805599453


@njit(cache=True, inline="always")
def splitmix64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _uniform(rs):
    rs, z = splitmix64(rs)
    return rs, (z >> np.uint64(11)) * _INV53


@njit(cache=True)
def float_to_window(x):
    """Binary digits 1..64 of x in [0, 1) (truncated)."""
    hi = np.floor(x * _TWO32)
    rem = x * _TWO32 - hi
    lo = np.floor(rem * _TWO32)
    return (np.uint64(hi) << np.uint64(32)) | np.uint64(lo)


@njit(cache=True, inline="always")
def window_to_float(w):
    return (w >> np.uint64(11)) * _INV53


@njit(cache=True)
def member(x, lo, hi, loc, hic):
    i = np.searchsorted(lo, x, side="right") - 1
    for j in (i, i - 1):
        if j < 0:
            continue
        if x > lo[j] and x < hi[j]:
            return True
        if x == lo[j] and loc[j]:
            return True
        if x == hi[j] and hic[j]:
            return True
    return False


@njit(cache=True, inline="always")
def step(kind, prm, x, w, rs, buf, nbits, use_tail):
    """Advance one step; returns (x, w, rs, buf, nbits, status)."""
    if kind == DOUBLING:
        bit = np.uint64(0)
        if use_tail:
            if nbits == 0:
                rs, buf = splitmix64(rs)
                nbits = 64
            bit = buf & np.uint64(1)
            buf = buf >> np.uint64(1)
            nbits -= 1
        w = (w << np.uint64(1)) | bit
        return window_to_float(w), w, rs, buf, nbits, OK
    if kind == GAUSS:
        y = 1.0 / x
        x = y - np.floor(y)
        if x < GAUSS_FLOOR:
            if not use_tail:
                return x, w, rs, buf, nbits, GAUSS_ZERO
            while x < GAUSS_FLOOR:
                rs, u = _uniform(rs)
                x = np.expm1(u * LN2)
        return x, w, rs, buf, nbits, OK
    if kind == INTERMITTENT:
        if x < 0.5:
            x = x * (1.0 + (2.0 * x) ** prm[0])
        else:
            x = 2.0 * x - 1.0
        return x, w, rs, buf, nbits, OK
    m = int(prm[0])
    i = m - 1
    for j in range(m):
        if x < prm[2 + j]:
            i = j
            break
    a = prm[m + 2 + i]
    b = prm[2 * m + 2 + i]
    p0 = prm[1 + i]
    p1 = prm[2 + i]
    x = a + (x - p0) * ((b - a) / (p1 - p0))
    return x, w, rs, buf, nbits, OK


@njit(cache=True, nogil=True)
def hit_batch(kind, prm, lo, hi, loc, hic, x0, w0, seeds, use_tail, k, cap, times, pos, nhits, status):
    """First ``k`` visits of each orbit to the target; gaps longer than ``cap`` overflow."""
    for s in range(x0.size):
        x = x0[s]
        w = w0[s]
        rs = seeds[s]
        buf = np.uint64(0)
        nb = 0
        t = 0
        last = 0
        n = 0
        st = OK
        while n < k:
            x, w, rs, buf, nb, st = step(kind, prm, x, w, rs, buf, nb, use_tail)
            if st != OK:
                break
            t += 1
            if member(x, lo, hi, loc, hic):
                times[s, n] = t
                pos[s, n] = x
                n += 1
                last = t
            elif t - last >= cap:
                st = OVERFLOW
                break
        nhits[s] = n
        status[s] = st


@njit(cache=True, nogil=True)
def count_batch(kind, prm, lo, hi, loc, hic, x0, w0, seeds, use_tail, nsteps, counts, status):
    """Visits to the target among steps 1..nsteps."""
    for s in range(x0.size):
        x = x0[s]
        w = w0[s]
        rs = seeds[s]
        buf = np.uint64(0)
        nb = 0
        c = 0
        st = OK
        for _ in range(nsteps):
            x, w, rs, buf, nb, st = step(kind, prm, x, w, rs, buf, nb, use_tail)
            if st != OK:
                break
            if member(x, lo, hi, loc, hic):
                c += 1
        counts[s] = c
        status[s] = st


@njit(cache=True, nogil=True)
def push_batch(kind, prm, x0, w0, seeds, use_tail, nsteps, xout, wout, status):
    for s in range(x0.size):
        x = x0[s]
        w = w0[s]
        rs = seeds[s]
        buf = np.uint64(0)
        nb = 0
        st = OK
        for _ in range(nsteps):
            x, w, rs, buf, nb, st = step(kind, prm, x, w, rs, buf, nb, use_tail)
            if st != OK:
                break
        xout[s] = x
        wout[s] = w
        status[s] = st


@njit(cache=True, nogil=True)
def induced_batch(kind, prm, ylo, yhi, yloc, yhic, alo, ahi, aloc, ahic, x0, w0, seeds, use_tail,
                  k, return_cap, cap, itimes, rtimes, pos, nhits, status):
    """Visits to A under the first-return map on Y (A inside Y).

    ``itimes`` counts induced steps; ``rtimes`` accumulates the individual
    return times to Y along the induced orbit, so that it can be compared
    with the flat hitting time of the same orbit.
    """
    for s in range(x0.size):
        x = x0[s]
        w = w0[s]
        rs = seeds[s]
        buf = np.uint64(0)
        nb = 0
        j = 0
        raw = 0
        lastj = 0
        n = 0
        st = OK
        while n < k:
            r = 0
            while True:
                x, w, rs, buf, nb, st = step(kind, prm, x, w, rs, buf, nb, use_tail)
                if st != OK:
                    break
                r += 1
                if member(x, ylo, yhi, yloc, yhic):
                    break
                if r >= return_cap:
                    st = RETURN_OVERFLOW
                    break
            if st != OK:
                break
            j += 1
            raw += r
            if member(x, alo, ahi, aloc, ahic):
                itimes[s, n] = j
                rtimes[s, n] = raw
                pos[s, n] = x
                n += 1
                lastj = j
            elif j - lastj >= cap:
                st = OVERFLOW
                break
        nhits[s] = n
        status[s] = st


@njit(cache=True, nogil=True)
def birkhoff_counts(kind, prm, lo, hi, loc, hic, offsets, x, w, seed, use_tail, burn_in, nbatches, batch_len, counts):
    """Visit counts of one long orbit to several sets, per consecutive batch.

    Set ``q`` occupies intervals ``offsets[q]:offsets[q+1]`` of the endpoint arrays.
    """
    rs = seed
    buf = np.uint64(0)
    nb = 0
    for _ in range(burn_in):
        x, w, rs, buf, nb, st = step(kind, prm, x, w, rs, buf, nb, use_tail)
    nsets = offsets.size - 1
    for b in range(nbatches):
        for _ in range(batch_len):
            x, w, rs, buf, nb, st = step(kind, prm, x, w, rs, buf, nb, use_tail)
            for q in range(nsets):
                for j in range(offsets[q], offsets[q + 1]):
                    if (lo[j] < x < hi[j]) or (x == lo[j] and loc[j]) or (x == hi[j] and hic[j]):
                        counts[q, b] += 1
                        break
