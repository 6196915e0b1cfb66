"""JIT-compiled twins of the stream generation and occupation sweep.

Bit-identical to the scalar/numpy reference implementations in
`quadcomp.rng` and `quadcomp.models` (asserted by tests); used by the
engine for large runs where allocation traffic dominates.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from quadcomp.rng import _GOLD, _GOLD2, _COUNT_SALT, _POISSON1_CDF

_U_GOLD = np.uint64(_GOLD)
_U_GOLD2 = np.uint64(_GOLD2)
_U_COUNT_SALT = np.uint64(_COUNT_SALT)
_U_M1 = np.uint64(0xBF58476D1CE4E5B9)
_U_M2 = np.uint64(0x94D049BB133111EB)
_CDF = _POISSON1_CDF


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _U_M1
    z = (z ^ (z >> np.uint64(27))) * _U_M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _unit(h):
    return (np.float64(h >> np.uint64(11)) + 0.5) * 2.0 ** -53


@njit(cache=True, inline="always")
def _block_count(bk):
    u = _unit(_mix64(bk ^ _U_COUNT_SALT))
    n = 0
    while n < _CDF.shape[0] and u >= _CDF[n]:
        n += 1
    return n


@njit(cache=True)
def first_event_after(key, s, until):
    """Earliest event > s and <= until on the edge stream; -1.0 if none."""
    if s >= until:
        return -1.0
    j = np.int64(max(0.0, np.floor(s)))
    while np.float64(j) < until:
        bk = _mix64(key + np.uint64(j + 1) * _U_GOLD)
        n = _block_count(bk)
        best = -1.0
        for i in range(n):
            t = np.float64(j) + _unit(_mix64(bk + np.uint64(i + 1) * _U_GOLD2))
            if t > s and (best < 0.0 or t < best):
                best = t
        if best >= 0.0:
            return best if best <= until else -1.0
        j += 1
    return -1.0


@njit(cache=True)
def occupation_sweep(keys_e, keys_n, L, t_max):
    """Occupation times of the pure-growth model (priority-queue sweep)."""
    occ = np.full((L + 1, L + 1), np.inf)
    cap = 1 << 12
    ht = np.empty(cap, dtype=np.float64)
    hs = np.empty(cap, dtype=np.int64)
    n = 0
    # seed entries: (0,1) and (1,0) at time 0
    ht[0] = 0.0
    hs[0] = 0 * (L + 1) + 1
    ht[1] = 0.0
    hs[1] = 1 * (L + 1) + 0
    n = 2
    while n > 0:
        tau = ht[0]
        sflat = hs[0]
        n -= 1
        ht[0] = ht[n]
        hs[0] = hs[n]
        i = 0
        while True:  # sift down
            c = 2 * i + 1
            if c >= n:
                break
            if c + 1 < n and (ht[c + 1] < ht[c] or (ht[c + 1] == ht[c] and hs[c + 1] < hs[c])):
                c += 1
            if ht[c] < ht[i] or (ht[c] == ht[i] and hs[c] < hs[i]):
                ht[i], ht[c] = ht[c], ht[i]
                hs[i], hs[c] = hs[c], hs[i]
                i = c
            else:
                break
        if tau > t_max:
            break
        x = sflat // (L + 1)
        y = sflat % (L + 1)
        if occ[x, y] <= tau:
            continue
        occ[x, y] = tau
        for d in range(2):
            if d == 0:
                nx, ny = x + 1, y
                key = keys_e[x, y]
            else:
                nx, ny = x, y + 1
                key = keys_n[x, y]
            if nx > L or ny > L or occ[nx, ny] != np.inf:
                continue
            cand = first_event_after(key, tau, t_max)
            if cand < 0.0:
                continue
            if n == cap:
                cap *= 2
                ht2 = np.empty(cap, dtype=np.float64)
                hs2 = np.empty(cap, dtype=np.int64)
                ht2[:n] = ht
                hs2[:n] = hs
                ht = ht2
                hs = hs2
            # sift up
            i = n
            ht[i] = cand
            hs[i] = nx * (L + 1) + ny
            n += 1
            while i > 0:
                p = (i - 1) // 2
                if ht[i] < ht[p] or (ht[i] == ht[p] and hs[i] < hs[p]):
                    ht[i], ht[p] = ht[p], ht[i]
                    hs[i], hs[p] = hs[p], hs[i]
                    i = p
                else:
                    break
    return occ


@njit(cache=True)
def column_apply(keys, act, eid, src, dst, j, t_lo, t_hi,
                 comp, hg, hc, hostile_needed):
    """Generate, order, and apply the events of one unit time block.

    Emits the events of block ``(j, j+1)`` restricted to the window
    ``(max(edge activation, t_lo), t_hi]``, orders them by
    ``(time, edge id)`` — the edge id is lexicographic in (source_x,
    source_y, direction), which is the documented tie break — and folds
    them into the three state arrays.  Returns the number of events
    applied.
    """
    m = keys.shape[0]
    cap = m + 6 * np.int64(np.sqrt(m + 16.0)) + 64
    times = np.empty(cap, dtype=np.float64)
    rows = np.empty(cap, dtype=np.int64)
    cnt = 0
    hi = np.float64(j + 1) if np.float64(j + 1) < t_hi else t_hi
    base = np.float64(j)
    lo_base = t_lo if t_lo > base else base
    for e in range(m):
        a = act[e]
        if a < lo_base:
            a = lo_base
        if a >= hi:
            continue
        bk = _mix64(keys[e] + np.uint64(j + 1) * _U_GOLD)
        n = _block_count(bk)
        for i in range(n):
            t = base + _unit(_mix64(bk + np.uint64(i + 1) * _U_GOLD2))
            if t > a and t <= hi:
                if cnt == cap:
                    cap = cap * 2
                    t2 = np.empty(cap, dtype=np.float64)
                    r2 = np.empty(cap, dtype=np.int64)
                    t2[:cnt] = times[:cnt]
                    r2[:cnt] = rows[:cnt]
                    times = t2
                    rows = r2
                times[cnt] = t
                rows[cnt] = e
                cnt += 1
    if cnt == 0:
        return 0
    # bucket sort on the fractional part, insertion sort within buckets
    K = 1
    while K < cnt // 4 + 1:
        K <<= 1
    bounds = np.zeros(K + 1, dtype=np.int64)
    idx = np.empty(cnt, dtype=np.int64)
    fK = np.float64(K)
    for i in range(cnt):
        b = np.int64((times[i] - base) * fK)
        if b >= K:
            b = K - 1
        idx[i] = b
        bounds[b + 1] += 1
    for b in range(K):
        bounds[b + 1] += bounds[b]
    out_t = np.empty(cnt, dtype=np.float64)
    out_r = np.empty(cnt, dtype=np.int64)
    pos = bounds[:K].copy()
    for i in range(cnt):
        p = pos[idx[i]]
        out_t[p] = times[i]
        out_r[p] = rows[i]
        pos[idx[i]] += 1
    for b in range(K):
        lo, up = bounds[b], bounds[b + 1]
        for i in range(lo + 1, up):
            tv = out_t[i]
            rv = out_r[i]
            ev = eid[rv]
            k = i - 1
            while k >= lo and (out_t[k] > tv or
                               (out_t[k] == tv and eid[out_r[k]] > ev)):
                out_t[k + 1] = out_t[k]
                out_r[k + 1] = out_r[k]
                k -= 1
            out_t[k + 1] = tv
            out_r[k + 1] = rv
    if hostile_needed:
        for i in range(cnt):
            e = out_r[i]
            s = src[e]
            d = dst[e]
            c = comp[s]
            if c == 1 or c == 2:
                comp[d] = c
            hg[d] = hg[s]
            hc[d] = hc[s]
    else:
        for i in range(cnt):
            e = out_r[i]
            s = src[e]
            d = dst[e]
            c = comp[s]
            if c == 1 or c == 2:
                comp[d] = c
    return cnt
