"""Counter-based splittable random streams.

Every random quantity in this package is a pure function of a 64-bit
master seed and a handful of integer coordinates (edge coordinates,
direction, block index, event index).  There is no shared-state
generator: any stream can be evaluated independently, in any order,
and always yields the same bits.

Poisson event streams are generated block-wise: unit time interval
``[j, j+1)`` carries a Poisson(1) number of events placed at i.i.d.
uniform positions.  This is exactly a rate-1 Poisson process and it
allows random access in time (no prefix has to be generated to read a
late interval).
"""

from __future__ import annotations

import math

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLD = 0x9E3779B97F4A7C15  # 2^64 / golden ratio, odd
_GOLD2 = 0xC2B2AE3D27D4EB4F
_COUNT_SALT = 0x5851F42D4C957F2D

# Domain tags keep independent randomness sources (arrow processes,
# passage-time weights, walk blocks) decorrelated under one master seed.
DOMAIN_ARROWS = 0x41
DOMAIN_FPP = 0x46
DOMAIN_WALK = 0x57
DOMAIN_GREEDY = 0x47

# Cumulative Poisson(1) probabilities, frozen so streams do not depend
# on the platform libm.  Saturates at k=18 (tail mass ~3e-18).
_POISSON1_CDF = np.array([
    0.36787944117144233, 0.7357588823428847, 0.9196986029286058,
    0.9810118431238463, 0.9963401531726563, 0.9994058151824183,
    0.999916758850712, 0.9999897508033253, 0.999998874797402,
    0.9999998885745216, 0.9999999899522336, 0.9999999991683892,
    0.9999999999364022, 0.9999999999954802, 0.9999999999997,
    0.9999999999999813, 0.9999999999999989, 0.9999999999999999,
    1.0,
])

_U64_GOLD = np.uint64(_GOLD)
_U64_GOLD2 = np.uint64(_GOLD2)
_U64_COUNT_SALT = np.uint64(_COUNT_SALT)
_U64_M1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_M2 = np.uint64(0x94D049BB133111EB)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer (scalar)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix64_vec(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, elementwise on a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * _U64_M1
    z = (z ^ (z >> np.uint64(27))) * _U64_M2
    return z ^ (z >> np.uint64(31))


def derive_key(seed: int, *words: int) -> int:
    """Derive a stream key by absorbing integer words into the seed."""
    h = seed & _MASK
    for w in words:
        h = (h + _GOLD) & _MASK
        h = mix64(h ^ (int(w) & _MASK))
    return h


def _unit(h: int) -> float:
    # 53 mantissa bits, offset to the open interval (0, 1)
    return ((h >> 11) + 0.5) * 2.0 ** -53


def _unit_vec(h: np.ndarray) -> np.ndarray:
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def _poisson1(u: float) -> int:
    return int(np.searchsorted(_POISSON1_CDF, u, side="right"))


def block_key(edge_key: int, j: int) -> int:
    return mix64((edge_key + (j + 1) * _GOLD) & _MASK)


def block_events(edge_key: int, j: int) -> list[float]:
    """Event times of one unit time block ``(j, j+1)``, ascending."""
    bk = block_key(edge_key, j)
    n = _poisson1(_unit(mix64(bk ^ _COUNT_SALT)))
    if n == 0:
        return []
    times = [j + _unit(mix64((bk + (i + 1) * _GOLD2) & _MASK)) for i in range(n)]
    times.sort()
    return times


def first_event_after(edge_key: int, s: float, until: float) -> float | None:
    """Earliest event time strictly greater than ``s`` and at most ``until``."""
    if s >= until:
        return None
    j = max(0, int(math.floor(s)))
    while j < until:
        for t in block_events(edge_key, j):
            if t > s:
                return t if t <= until else None
        j += 1
    return None


def events_in_interval(edge_key: int, lo: float, hi: float) -> np.ndarray:
    """All event times ``t`` with ``lo < t <= hi``, ascending (float64)."""
    if hi <= lo:
        return np.empty(0, dtype=np.float64)
    out: list[float] = []
    for j in range(max(0, int(math.floor(lo))), int(math.ceil(hi))):
        for t in block_events(edge_key, j):
            if lo < t <= hi:
                out.append(t)
    return np.asarray(out, dtype=np.float64)


def _segmented_arange(counts: np.ndarray) -> np.ndarray:
    """[0..c0-1, 0..c1-1, ...] for a vector of segment lengths."""
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    ends = np.cumsum(counts)
    starts = ends - counts
    return np.arange(total, dtype=np.int64) - np.repeat(starts, counts)


def batch_block_events(
    edge_keys: np.ndarray, j_lo: np.ndarray, j_hi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Generate events of many edges over per-edge block ranges at once.

    ``edge_keys`` (uint64), ``j_lo``/``j_hi`` (int64, inclusive block
    range per edge; empty when ``j_hi < j_lo``).  Returns ``(rows,
    times)`` where ``rows[i]`` indexes into ``edge_keys``; times are
    unordered across edges.
    """
    n_blocks = np.maximum(j_hi - j_lo + 1, 0)
    total_blocks = int(n_blocks.sum())
    if total_blocks == 0:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    row_of_block = np.repeat(np.arange(len(edge_keys), dtype=np.int64), n_blocks)
    j_flat = _segmented_arange(n_blocks) + np.repeat(j_lo, n_blocks)

    bkeys = mix64_vec(
        edge_keys[row_of_block] + (j_flat.astype(np.uint64) + np.uint64(1)) * _U64_GOLD
    )
    counts = np.searchsorted(
        _POISSON1_CDF, _unit_vec(mix64_vec(bkeys ^ _U64_COUNT_SALT)), side="right"
    ).astype(np.int64)
    total_ev = int(counts.sum())
    if total_ev == 0:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    block_of_ev = np.repeat(np.arange(total_blocks, dtype=np.int64), counts)
    i_in_block = _segmented_arange(counts).astype(np.uint64)
    u = _unit_vec(mix64_vec(bkeys[block_of_ev] + (i_in_block + np.uint64(1)) * _U64_GOLD2))
    times = j_flat[block_of_ev].astype(np.float64) + u
    return (row_of_block[block_of_ev], times)


def uniform_field(keys: np.ndarray) -> np.ndarray:
    """One uniform (0,1) variate per uint64 key."""
    return _unit_vec(mix64_vec(keys))


def exponential_field(keys: np.ndarray) -> np.ndarray:
    """One mean-1 exponential variate per uint64 key (strictly > 0)."""
    return -np.log1p(-uniform_field(keys))


def key_blocks(seed: int, domain: int, n: int, m: int) -> np.ndarray:
    """uint64 key array of shape (n, m) for per-(block, slot) draws.

    Bit-compatible with ``derive_key(seed, domain, k, i)``.
    """
    h0 = np.uint64((derive_key(seed, domain) + _GOLD) & _MASK)
    k = np.arange(n, dtype=np.uint64)[:, None]
    i = np.arange(m, dtype=np.uint64)[None, :]
    h1 = mix64_vec(h0 ^ k) + _U64_GOLD
    return mix64_vec(h1 ^ i)


def key_grid(seed: int, domain: int, nx: int, ny: int, direction: int) -> np.ndarray:
    """uint64 key array of shape (nx, ny) for per-edge scalar draws.

    Bit-compatible with ``derive_key(seed, domain, x, y, direction)``.
    """
    h0 = np.uint64((derive_key(seed, domain) + _GOLD) & _MASK)
    x = np.arange(nx, dtype=np.uint64)[:, None]
    y = np.arange(ny, dtype=np.uint64)[None, :]
    h1 = mix64_vec(h0 ^ x) + _U64_GOLD
    h2 = mix64_vec(h1 ^ y) + _U64_GOLD
    return mix64_vec(h2 ^ np.uint64(direction))
