"""Hot loops of the polarization recursion.

Each kernel exists twice: a vectorized NumPy version (``*_np``) and a numba
``@njit`` version (``*_nb``). The public names dispatch to numba unless
numba is missing or ``QPOLAR_DISABLE_NUMBA`` is set to a truthy value
before import.

A binary channel is an ``(M, 2)`` float array of ``(p(y|0), p(y|1))`` rows.
"""

from __future__ import annotations

import heapq
import os

import numpy as np

MERGE_DECIMALS = 12

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("QPOLAR_DISABLE_NUMBA", "").lower() not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# NumPy path
# ---------------------------------------------------------------------------

def polar_minus_np(P):
    """Output ``(y1, y2)``: ``p(y|u1) = 1/2 sum_u2 W(y1|u1^u2) W(y2|u2)``."""
    a0, a1 = P[:, 0][:, None], P[:, 1][:, None]
    b0, b1 = P[:, 0][None, :], P[:, 1][None, :]
    q0 = 0.5 * (a0 * b0 + a1 * b1)
    q1 = 0.5 * (a1 * b0 + a0 * b1)
    return np.stack([q0.ravel(), q1.ravel()], axis=1)


def polar_plus_np(P):
    """Output ``(y1, y2, u1)``: ``p(y, u1|u2) = 1/2 W(y1|u1^u2) W(y2|u2)``; u1 is the major index."""
    a0, a1 = P[:, 0][:, None], P[:, 1][:, None]
    b0, b1 = P[:, 0][None, :], P[:, 1][None, :]
    u0 = np.stack([(0.5 * a0 * b0).ravel(), (0.5 * a1 * b1).ravel()], axis=1)
    u1 = np.stack([(0.5 * a1 * b0).ravel(), (0.5 * a0 * b1).ravel()], axis=1)
    return np.concatenate([u0, u1])


def merge_identical_np(P, decimals=MERGE_DECIMALS):
    """Sum symbols whose ``(p0, p1)`` agree after rounding; output sorted by key."""
    if len(P) == 0:
        return P.copy()
    keys = np.round(P, decimals)
    order = np.lexsort((keys[:, 1], keys[:, 0]))
    k = keys[order]
    starts = np.flatnonzero(np.r_[True, np.any(k[1:] != k[:-1], axis=1)])
    return np.add.reduceat(P[order], starts, axis=0)


def merge_ratio_np(P, decimals=MERGE_DECIMALS):
    """Sum symbols sharing a posterior ``p0 / (p0 + p1)``; capacity is unchanged."""
    tot = P.sum(axis=1)
    P = P[tot > 0]
    if len(P) == 0:
        return P.copy()
    key = np.round(P[:, 0] / P.sum(axis=1), decimals)
    order = np.argsort(key, kind="mergesort")
    k = key[order]
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    return np.add.reduceat(P[order], starts, axis=0)


def capacity_np(P):
    """Uniform-input mutual information in bits."""
    m = 0.5 * (P[:, 0] + P[:, 1])
    total = 0.0
    for c in (0, 1):
        x = P[:, c]
        nz = x > 0
        total += 0.5 * np.sum(x[nz] * np.log2(x[nz] / m[nz]))
    return float(total)


def _contrib(a, b):
    s = a + b
    out = 0.0
    if a > 0:
        out += a * np.log2(2.0 * a / s)
    if b > 0:
        out += b * np.log2(2.0 * b / s)
    return 0.5 * out


def bin_degrade_np(P, nbins):
    """Degrade by pooling symbols into ``nbins`` equal-width posterior bins."""
    tot = P.sum(axis=1)
    P = P[tot > 0]
    x = P[:, 0] / P.sum(axis=1)
    idx = np.minimum((x * nbins).astype(np.int64), nbins - 1)
    out = np.stack([np.bincount(idx, P[:, 0], nbins), np.bincount(idx, P[:, 1], nbins)], axis=1)
    return out[out.sum(axis=1) > 0]


def greedy_degrade_np(P, mu):
    """Merge LR-adjacent symbol pairs of least capacity loss until ``mu`` remain.

    Every merge is a degradation, so the result's capacity is a lower bound.
    """
    tot = P.sum(axis=1)
    P = P[tot > 0]
    m = len(P)
    if m <= mu:
        return P.copy()
    order = np.argsort(P[:, 0] / P.sum(axis=1), kind="mergesort")
    a = P[order, 0].tolist()
    b = P[order, 1].tolist()
    nxt = list(range(1, m)) + [-1]
    prv = [-1] + list(range(m - 1))
    alive = [True] * m
    stamp = [0] * m
    c = [_contrib(a[i], b[i]) for i in range(m)]
    heap = []
    for i in range(m - 1):
        j = i + 1
        heap.append((c[i] + c[j] - _contrib(a[i] + a[j], b[i] + b[j]), i, 0, 0))
    heapq.heapify(heap)
    count = m
    while count > mu:
        loss, i, si, sj = heapq.heappop(heap)
        j = nxt[i] if alive[i] else -1
        if j < 0 or stamp[i] != si or stamp[j] != sj:
            continue
        a[i] += a[j]
        b[i] += b[j]
        c[i] = _contrib(a[i], b[i])
        alive[j] = False
        nxt[i] = nxt[j]
        if nxt[j] >= 0:
            prv[nxt[j]] = i
        stamp[i] += 1
        count -= 1
        p = prv[i]
        if p >= 0:
            heapq.heappush(heap, (c[p] + c[i] - _contrib(a[p] + a[i], b[p] + b[i]), p, stamp[p], stamp[i]))
        n = nxt[i]
        if n >= 0:
            heapq.heappush(heap, (c[i] + c[n] - _contrib(a[i] + a[n], b[i] + b[n]), i, stamp[i], stamp[n]))
    keep = [i for i in range(m) if alive[i]]
    return np.stack([np.array(a)[keep], np.array(b)[keep]], axis=1)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    njit = numba.njit(cache=True, nogil=True)

    @njit
    def polar_minus_nb(P):
        m = P.shape[0]
        out = np.empty((m * m, 2))
        for y1 in range(m):
            for y2 in range(m):
                r = y1 * m + y2
                out[r, 0] = 0.5 * (P[y1, 0] * P[y2, 0] + P[y1, 1] * P[y2, 1])
                out[r, 1] = 0.5 * (P[y1, 1] * P[y2, 0] + P[y1, 0] * P[y2, 1])
        return out

    @njit
    def polar_plus_nb(P):
        m = P.shape[0]
        out = np.empty((2 * m * m, 2))
        for y1 in range(m):
            for y2 in range(m):
                r = y1 * m + y2
                out[r, 0] = 0.5 * P[y1, 0] * P[y2, 0]
                out[r, 1] = 0.5 * P[y1, 1] * P[y2, 1]
                out[m * m + r, 0] = 0.5 * P[y1, 1] * P[y2, 0]
                out[m * m + r, 1] = 0.5 * P[y1, 0] * P[y2, 1]
        return out

    @njit
    def _round(x, decimals):
        return np.round(x, decimals)

    @njit
    def merge_identical_nb(P, decimals=MERGE_DECIMALS):
        m = P.shape[0]
        k0 = np.empty(m)
        k1 = np.empty(m)
        for i in range(m):
            k0[i] = _round(P[i, 0], decimals)
            k1[i] = _round(P[i, 1], decimals)
        o1 = np.argsort(k1, kind="mergesort")
        o0 = np.argsort(k0[o1], kind="mergesort")
        order = o1[o0]
        out = np.empty((m, 2))
        n = -1
        for t in range(m):
            i = order[t]
            if n < 0 or k0[i] != k0[order[t - 1]] or k1[i] != k1[order[t - 1]]:
                n += 1
                out[n, 0] = P[i, 0]
                out[n, 1] = P[i, 1]
            else:
                out[n, 0] += P[i, 0]
                out[n, 1] += P[i, 1]
        return out[: n + 1].copy()

    @njit
    def merge_ratio_nb(P, decimals=MERGE_DECIMALS):
        m = P.shape[0]
        key = np.empty(m)
        keep = np.zeros(m, dtype=np.bool_)
        for i in range(m):
            s = P[i, 0] + P[i, 1]
            if s > 0:
                keep[i] = True
                key[i] = _round(P[i, 0] / s, decimals)
            else:
                key[i] = np.inf
        order = np.argsort(key, kind="mergesort")
        out = np.empty((m, 2))
        n = -1
        prev = np.nan
        for t in range(m):
            i = order[t]
            if not keep[i]:
                continue
            if n < 0 or key[i] != prev:
                n += 1
                out[n, 0] = P[i, 0]
                out[n, 1] = P[i, 1]
                prev = key[i]
            else:
                out[n, 0] += P[i, 0]
                out[n, 1] += P[i, 1]
        return out[: n + 1].copy()

    @njit
    def capacity_nb(P):
        total = 0.0
        for y in range(P.shape[0]):
            m = 0.5 * (P[y, 0] + P[y, 1])
            for c in range(2):
                x = P[y, c]
                if x > 0:
                    total += 0.5 * x * np.log2(x / m)
        return total

    @njit
    def _contrib_nb(a, b):
        s = a + b
        out = 0.0
        if a > 0:
            out += a * np.log2(2.0 * a / s)
        if b > 0:
            out += b * np.log2(2.0 * b / s)
        return 0.5 * out

    @njit
    def bin_degrade_nb(P, nbins):
        acc = np.zeros((nbins, 2))
        for y in range(P.shape[0]):
            s = P[y, 0] + P[y, 1]
            if s <= 0:
                continue
            j = int(P[y, 0] / s * nbins)
            if j > nbins - 1:
                j = nbins - 1
            acc[j, 0] += P[y, 0]
            acc[j, 1] += P[y, 1]
        n = 0
        for j in range(nbins):
            if acc[j, 0] + acc[j, 1] > 0:
                n += 1
        out = np.empty((n, 2))
        n = 0
        for j in range(nbins):
            if acc[j, 0] + acc[j, 1] > 0:
                out[n, 0] = acc[j, 0]
                out[n, 1] = acc[j, 1]
                n += 1
        return out

    @njit
    def _less(hk, hi, x, y):
        return hk[x] < hk[y] or (hk[x] == hk[y] and hi[x] < hi[y])

    @njit
    def _heap_push(hk, hi, hs, ht, size, key, i, si, sj):
        pos = size
        hk[pos] = key
        hi[pos] = i
        hs[pos] = si
        ht[pos] = sj
        while pos > 0:
            parent = (pos - 1) // 2
            if _less(hk, hi, pos, parent):
                hk[pos], hk[parent] = hk[parent], hk[pos]
                hi[pos], hi[parent] = hi[parent], hi[pos]
                hs[pos], hs[parent] = hs[parent], hs[pos]
                ht[pos], ht[parent] = ht[parent], ht[pos]
                pos = parent
            else:
                break
        return size + 1

    @njit
    def _heap_pop(hk, hi, hs, ht, size):
        key, i, si, sj = hk[0], hi[0], hs[0], ht[0]
        size -= 1
        hk[0], hi[0], hs[0], ht[0] = hk[size], hi[size], hs[size], ht[size]
        pos = 0
        while True:
            left = 2 * pos + 1
            right = left + 1
            best = pos
            if left < size and _less(hk, hi, left, best):
                best = left
            if right < size and _less(hk, hi, right, best):
                best = right
            if best == pos:
                break
            hk[pos], hk[best] = hk[best], hk[pos]
            hi[pos], hi[best] = hi[best], hi[pos]
            hs[pos], hs[best] = hs[best], hs[pos]
            ht[pos], ht[best] = ht[best], ht[pos]
            pos = best
        return key, i, si, sj, size

    @njit
    def _greedy_degrade_sorted(a, b, mu):
        m = a.shape[0]
        nxt = np.empty(m, dtype=np.int64)
        prv = np.empty(m, dtype=np.int64)
        for i in range(m):
            nxt[i] = i + 1 if i + 1 < m else -1
            prv[i] = i - 1
        alive = np.ones(m, dtype=np.bool_)
        stamp = np.zeros(m, dtype=np.int64)
        c = np.empty(m)
        for i in range(m):
            c[i] = _contrib_nb(a[i], b[i])
        cap = 3 * m + 1
        hk = np.empty(cap)
        hi = np.empty(cap, dtype=np.int64)
        hs = np.empty(cap, dtype=np.int64)
        ht = np.empty(cap, dtype=np.int64)
        size = 0
        for i in range(m - 1):
            j = i + 1
            size = _heap_push(hk, hi, hs, ht, size,
                              c[i] + c[j] - _contrib_nb(a[i] + a[j], b[i] + b[j]), i, 0, 0)
        count = m
        while count > mu and size > 0:
            loss, i, si, sj, size = _heap_pop(hk, hi, hs, ht, size)
            if not alive[i]:
                continue
            j = nxt[i]
            if j < 0 or stamp[i] != si or stamp[j] != sj:
                continue
            a[i] += a[j]
            b[i] += b[j]
            c[i] = _contrib_nb(a[i], b[i])
            alive[j] = False
            nxt[i] = nxt[j]
            if nxt[j] >= 0:
                prv[nxt[j]] = i
            stamp[i] += 1
            count -= 1
            p = prv[i]
            if p >= 0:
                size = _heap_push(hk, hi, hs, ht, size,
                                  c[p] + c[i] - _contrib_nb(a[p] + a[i], b[p] + b[i]), p, stamp[p], stamp[i])
            n = nxt[i]
            if n >= 0:
                size = _heap_push(hk, hi, hs, ht, size,
                                  c[i] + c[n] - _contrib_nb(a[i] + a[n], b[i] + b[n]), i, stamp[i], stamp[n])
        out = np.empty((count, 2))
        t = 0
        for i in range(m):
            if alive[i]:
                out[t, 0] = a[i]
                out[t, 1] = b[i]
                t += 1
        return out

    def greedy_degrade_nb(P, mu):
        tot = P.sum(axis=1)
        P = P[tot > 0]
        if len(P) <= mu:
            return P.copy()
        order = np.argsort(P[:, 0] / P.sum(axis=1), kind="mergesort")
        return _greedy_degrade_sorted(np.ascontiguousarray(P[order, 0]), np.ascontiguousarray(P[order, 1]), mu)


if USE_NUMBA:
    polar_minus = polar_minus_nb
    polar_plus = polar_plus_nb
    merge_identical = merge_identical_nb
    merge_ratio = merge_ratio_nb
    capacity = capacity_nb
    bin_degrade = bin_degrade_nb
    greedy_degrade = greedy_degrade_nb
else:
    polar_minus = polar_minus_np
    polar_plus = polar_plus_np
    merge_identical = merge_identical_np
    merge_ratio = merge_ratio_np
    capacity = capacity_np
    bin_degrade = bin_degrade_np
    greedy_degrade = greedy_degrade_np

BACKEND = "numba" if USE_NUMBA else "numpy"
