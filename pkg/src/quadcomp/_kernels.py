"""Hot event-application loop, JIT-compiled when numba is available.

The unified rule: an arrow copies the source state to the target, gated
by source occupancy for the occupancy models.  One pass drives the
competition array (which also carries the pure-growth model: occupied
means non-vacant) and both hostile-environment arrays.
"""

from __future__ import annotations

import numpy as np

_RED = 1
_BLUE = 2


def _apply_events_py(src: np.ndarray, dst: np.ndarray,
                     comp: np.ndarray, hg: np.ndarray, hc: np.ndarray) -> None:
    for i in range(src.shape[0]):
        s = src[i]
        d = dst[i]
        c = comp[s]
        if c == _RED or c == _BLUE:
            comp[d] = c
        hg[d] = hg[s]
        hc[d] = hc[s]


try:
    from numba import njit

    apply_events = njit(cache=True)(_apply_events_py)
    BACKEND = "numba"
except ImportError:  # pragma: no cover - numba is a declared dependency
    apply_events = _apply_events_py
    BACKEND = "python"

apply_events_reference = _apply_events_py
