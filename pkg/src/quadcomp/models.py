"""Forward event-driven engines for the four lattice models.

All four models are driven by the same arrow structure and one unified
event rule (copy the source state to the target, gated by source
occupancy for the occupancy models), so the coupling inclusions between
them hold exactly, event by event:

* pure growth (occupied set)  Z = R `union` B of the competition model,
* two-type competition        (R, B), seeded red at (1,0), blue at (0,1),
* hostile-environment growth  black seeds in an all-white quadrant,
* hostile-environment competition  red/blue seeds in an all-white quadrant.

The engine never materializes arrows on edges that cannot matter: an
arrow can change some model's state only if one endpoint is reachable
from the seeds, so the occupation times of the pure-growth model (found
first by a priority-queue sweep) bound the active region exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Sequence, TextIO

import numpy as np

from quadcomp import rng
from quadcomp.percolation import ArrowEvent, Direction, EventWindow, Site

BOX_MARGIN = 32
BOX_FACTOR = 3.0
_SLICE_TARGET_EVENTS = 6_000_000


class CellState(IntEnum):
    VACANT = 0
    RED = 1
    BLUE = 2
    WHITE = 3
    BLACK = 4

    @property
    def label(self) -> str:
        return self.name.lower()


_STATE_BY_LABEL = {s.label: s for s in CellState}


class ModelKind(str, Enum):
    RICHARDSON = "richardson"
    COMPETITION = "competition"
    HOSTILE_GROWTH = "hostile-growth"
    HOSTILE_COMPETITION = "hostile-competition"

    @property
    def is_hostile(self) -> bool:
        return self in (ModelKind.HOSTILE_GROWTH, ModelKind.HOSTILE_COMPETITION)

    @property
    def default_state(self) -> CellState:
        return CellState.WHITE if self.is_hostile else CellState.VACANT

    @property
    def colored_states(self) -> frozenset[CellState]:
        """States that count as occupied / colonized for this model."""
        if self is ModelKind.HOSTILE_GROWTH:
            return frozenset({CellState.BLACK})
        return frozenset({CellState.RED, CellState.BLUE})


def default_box_side(t_max: float) -> int:
    """Box policy: linear in the horizon plus a safety margin.

    The occupied sets grow linearly, so a linear box with margin keeps
    boundary touches (which are detected and flagged) negligible.
    """
    return int(math.ceil(BOX_FACTOR * t_max)) + BOX_MARGIN


class LatticeState:
    """Sparse configuration of one model at one time.

    Sites absent from the map carry the model's default state (vacant
    for the occupancy models, white for the hostile ones).  The origin
    carries no particle in any model: it has no incident edges.
    """

    __slots__ = ("kind", "time", "box_side", "_xs", "_ys", "_vals", "_cells")

    def __init__(self, kind: ModelKind, time: float, box_side: int,
                 xs: np.ndarray, ys: np.ndarray, vals: np.ndarray):
        self.kind = kind
        self.time = float(time)
        self.box_side = int(box_side)
        order = np.lexsort((ys, xs))
        self._xs = np.asarray(xs, dtype=np.int32)[order]
        self._ys = np.asarray(ys, dtype=np.int32)[order]
        self._vals = np.asarray(vals, dtype=np.int8)[order]
        self._cells: dict[Site, CellState] | None = None

    @classmethod
    def from_cells(cls, kind: ModelKind, time: float, box_side: int,
                   cells: dict[tuple[int, int], CellState]) -> "LatticeState":
        items = [(x, y, int(v)) for (x, y), v in cells.items()
                 if CellState(v) != kind.default_state]
        xs = np.array([i[0] for i in items], dtype=np.int32)
        ys = np.array([i[1] for i in items], dtype=np.int32)
        vals = np.array([i[2] for i in items], dtype=np.int8)
        return cls(kind, time, box_side, xs, ys, vals)

    @property
    def cells(self) -> dict[Site, CellState]:
        """Map of non-default sites, built lazily."""
        if self._cells is None:
            self._cells = {
                Site(int(x), int(y)): CellState(int(v))
                for x, y, v in zip(self._xs, self._ys, self._vals)
            }
        return self._cells

    def state_at(self, site: tuple[int, int]) -> CellState:
        if site == (0, 0):
            return CellState.VACANT
        return self.cells.get(Site(*site), self.kind.default_state)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(xs, ys, states) of all non-default cells, sorted by (x, y)."""
        return self._xs, self._ys, self._vals

    def sites_with(self, states: Iterable[CellState]) -> np.ndarray:
        """(n, 2) array of sites currently in any of the given states."""
        wanted = {int(s) for s in states}
        if self.kind.default_state in (CellState(w) for w in wanted):
            raise ValueError("cannot enumerate sites in the default state")
        mask = np.isin(self._vals, list(wanted))
        return np.column_stack([self._xs[mask], self._ys[mask]])

    def colored_sites(self) -> np.ndarray:
        return self.sites_with(self.kind.colored_states)

    def site_set(self, states: Iterable[CellState] | None = None) -> set[tuple[int, int]]:
        arr = self.sites_with(states if states is not None else self.kind.colored_states)
        return {(int(x), int(y)) for x, y in arr}

    def __len__(self) -> int:
        return len(self._vals)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatticeState):
            return NotImplemented
        return (self.kind == other.kind
                and self.time == other.time
                and self.box_side == other.box_side
                and np.array_equal(self._xs, other._xs)
                and np.array_equal(self._ys, other._ys)
                and np.array_equal(self._vals, other._vals))


@dataclass
class SnapshotSeries:
    """Checkpointed states of one or several coupled models, one seed."""

    seed: int
    kinds: tuple[ModelKind, ...]
    box_side: int
    t_max: float
    checkpoints: list[tuple[float, dict[ModelKind, LatticeState]]]
    truncated: bool

    def states(self, kind: ModelKind) -> list[LatticeState]:
        return [states[kind] for _, states in self.checkpoints]

    def at(self, time: float, kind: ModelKind) -> LatticeState:
        for t, states in self.checkpoints:
            if t == time:
                return states[kind]
        raise KeyError(f"no checkpoint at t={time}")


def init_default(kind: ModelKind, box_side: int) -> LatticeState:
    """The default initial configuration on a box.

    Occupancy models start with red at (1,0) and blue at (0,1) (the pure
    growth model reads both as occupied); hostile models start with the
    same two seeds as the only non-white sites.
    """
    if box_side < 1:
        raise ValueError(
            f"box_side={box_side} too small: the box must contain (1,0) and (0,1)")
    kind = ModelKind(kind)
    if kind is ModelKind.HOSTILE_GROWTH:
        seeds = {(1, 0): CellState.BLACK, (0, 1): CellState.BLACK}
    else:
        seeds = {(1, 0): CellState.RED, (0, 1): CellState.BLUE}
    return LatticeState.from_cells(kind, 0.0, box_side, seeds)


def apply_event(state: LatticeState, event: ArrowEvent) -> LatticeState:
    """Apply one arrow to a state, returning the new state.

    Occupancy models: an arrow from an occupied source colonizes or
    flips the target to the source color; arrows from vacant sources do
    nothing.  Hostile models: the target adopts the source color
    unconditionally (voter rule).  This reference path is quadratic in
    the number of cells and meant for small configurations and tests;
    `run` and `coupled_run` produce identical states.
    """
    if event.time < state.time:
        raise ValueError(f"event at t={event.time} is before state time {state.time}")
    src = event.edge.source
    dst = event.edge.target
    L = state.box_side
    if not (0 <= src[0] <= L and 0 <= src[1] <= L
            and 0 <= dst[0] <= L and 0 <= dst[1] <= L):
        raise ValueError(f"event edge {src}->{dst} outside box [0,{L}]^2")
    cells = dict(state.cells)
    s = state.state_at(src)
    if state.kind.is_hostile:
        if s == CellState.WHITE:
            cells.pop(Site(*dst), None)
        else:
            cells[Site(*dst)] = s
    else:
        if s in (CellState.RED, CellState.BLUE):
            cells[Site(*dst)] = s
    new = LatticeState.from_cells(state.kind, event.time, L, cells)
    return new


# --------------------------------------------------------------------------
# engine
# --------------------------------------------------------------------------

def _edge_key_grids(seed: int, box_side: int) -> tuple[np.ndarray, np.ndarray]:
    n = box_side + 1
    return (rng.key_grid(seed, rng.DOMAIN_ARROWS, n, n, int(Direction.EAST)),
            rng.key_grid(seed, rng.DOMAIN_ARROWS, n, n, int(Direction.NORTH)))


def richardson_occupation(seed: int, t_max: float,
                          box_side: int | None = None) -> np.ndarray:
    """Occupation times of the pure-growth model on the box, inf beyond t_max.

    occ[x, y] is the first time a directed space-time arrow path from
    the seeds reaches (x, y); seeds have time 0.
    """
    L = default_box_side(t_max) if box_side is None else int(box_side)
    keys_e, keys_n = _edge_key_grids(seed, L)
    return _occupation_sweep(keys_e, keys_n, L, t_max)


def _occupation_sweep(keys_e: np.ndarray, keys_n: np.ndarray,
                      L: int, t_max: float) -> np.ndarray:
    occ = np.full((L + 1, L + 1), np.inf)
    heap: list[tuple[float, int, int]] = [(0.0, 0, 1), (0.0, 1, 0)]
    first_after = rng.first_event_after
    while heap:
        tau, x, y = heapq.heappop(heap)
        if tau > t_max:
            break
        if occ[x, y] <= tau:
            continue
        occ[x, y] = tau
        if x < L and occ[x + 1, y] == np.inf:
            cand = first_after(int(keys_e[x, y]), tau, t_max)
            if cand is not None:
                heapq.heappush(heap, (cand, x + 1, y))
        if y < L and occ[x, y + 1] == np.inf:
            cand = first_after(int(keys_n[x, y]), tau, t_max)
            if cand is not None:
                heapq.heappush(heap, (cand, x, y + 1))
    return occ


def _active_edges(occ: np.ndarray, t_max: float, L: int):
    """Edges with at least one endpoint reachable by t_max, deduplicated.

    Arrows on all other edges are no-ops in every model (both endpoints
    still hold their initial default state when such an arrow fires).
    Returns (sx, sy, d, activation) sorted by edge identity.
    """
    zx, zy = np.nonzero(occ <= t_max)
    parts = []
    # outgoing east / north
    m = zx < L
    parts.append((zx[m], zy[m], np.zeros(m.sum(), dtype=np.int8)))
    m = zy < L
    parts.append((zx[m], zy[m], np.ones(m.sum(), dtype=np.int8)))
    # incoming east / north (source must exist and not be the origin)
    m = (zx >= 1) & ~((zx == 1) & (zy == 0))
    parts.append((zx[m] - 1, zy[m], np.zeros(m.sum(), dtype=np.int8)))
    m = (zy >= 1) & ~((zy == 1) & (zx == 0))
    parts.append((zx[m], zy[m] - 1, np.ones(m.sum(), dtype=np.int8)))

    sx = np.concatenate([p[0] for p in parts]).astype(np.int64)
    sy = np.concatenate([p[1] for p in parts]).astype(np.int64)
    d = np.concatenate([p[2] for p in parts]).astype(np.int64)
    eid = (sx * (L + 1) + sy) * 2 + d
    eid = np.unique(eid)
    d = (eid % 2).astype(np.int8)
    sflat = eid // 2
    sx = (sflat // (L + 1)).astype(np.int32)
    sy = (sflat % (L + 1)).astype(np.int32)
    tx = sx + (d == 0)
    ty = sy + (d == 1)
    activation = np.minimum(occ[sx, sy], occ[tx, ty])
    return sx, sy, d, activation


def _order_events(times: np.ndarray, sx: np.ndarray, sy: np.ndarray,
                  d: np.ndarray) -> np.ndarray:
    """Time order with (source_x, source_y, direction) breaking exact ties."""
    order = np.argsort(times, kind="stable")
    t_sorted = times[order]
    dup = np.nonzero(t_sorted[1:] == t_sorted[:-1])[0]
    if dup.size:
        # ties have probability zero; resolve the rare float collisions
        idx = np.unique(np.concatenate([dup, dup + 1]))
        runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
        for run in runs:
            sub = order[run]
            key = np.lexsort((d[sub], sy[sub], sx[sub]))
            order[run] = sub[key]
    return order


def _slice_boundaries(t_max: float, expected_events: float) -> np.ndarray:
    n_slices = max(1, int(math.ceil(expected_events / _SLICE_TARGET_EVENTS)))
    return np.linspace(0.0, t_max, n_slices + 1)


_SEED_CELLS = ((1, 0), (0, 1))


def _init_arrays(L: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = (L + 1) * (L + 1)
    comp = np.zeros(n, dtype=np.int8)
    hg = np.full(n, int(CellState.WHITE), dtype=np.int8)
    hc = np.full(n, int(CellState.WHITE), dtype=np.int8)
    hg[0] = hc[0] = 0  # the origin carries no particle
    red = 1 * (L + 1) + 0
    blue = 0 * (L + 1) + 1
    comp[red], comp[blue] = int(CellState.RED), int(CellState.BLUE)
    hg[red] = hg[blue] = int(CellState.BLACK)
    hc[red], hc[blue] = int(CellState.RED), int(CellState.BLUE)
    return comp, hg, hc


def _snapshot(kind: ModelKind, time: float, L: int, occ: np.ndarray,
              comp: np.ndarray, hg: np.ndarray, hc: np.ndarray) -> LatticeState:
    if kind is ModelKind.RICHARDSON:
        xs, ys = np.nonzero(occ <= time)
        vals = comp[xs * (L + 1) + ys]
    elif kind is ModelKind.COMPETITION:
        flat = np.nonzero(comp != 0)[0]
        xs, ys, vals = flat // (L + 1), flat % (L + 1), comp[flat]
    elif kind is ModelKind.HOSTILE_GROWTH:
        flat = np.nonzero(hg == int(CellState.BLACK))[0]
        xs, ys, vals = flat // (L + 1), flat % (L + 1), hg[flat]
    else:
        flat = np.nonzero((hc == int(CellState.RED)) | (hc == int(CellState.BLUE)))[0]
        xs, ys, vals = flat // (L + 1), flat % (L + 1), hc[flat]
    return LatticeState(kind, time, L, xs.astype(np.int32), ys.astype(np.int32),
                        vals.copy())


def _chunks_numpy(keys, activation, t_max):
    """Sorted event chunks over slices of the horizon (numpy reference path)."""
    expected = float(np.maximum(t_max - activation, 0.0).sum())
    bounds = _slice_boundaries(t_max, expected)
    for a, b in zip(bounds[:-1], bounds[1:]):
        sel = np.nonzero(activation < b)[0]
        lo = np.maximum(activation[sel], a)
        j_lo = np.floor(lo).astype(np.int64)
        j_hi = np.full(sel.shape, int(math.ceil(b)) - 1, dtype=np.int64)
        rows, times = rng.batch_block_events(keys[sel], j_lo, j_hi)
        keep = (times > lo[rows]) & (times <= b)
        rows = sel[rows[keep]]
        times = times[keep]
        order = np.argsort(times, kind="stable")
        yield float(b), times[order], rows[order]


def _drive_numba(keys, activation, eid, src_flat, dst_flat, t_max,
                 pending, comp, hg, hc, take_snapshot,
                 hostile_needed: bool) -> None:
    """Generate+apply one unit time block at a time (fused JIT path)."""
    from quadcomp import _engine_nb

    order = np.argsort(activation, kind="stable")
    keys_s = keys[order]
    act_s = activation[order]
    eid_s = eid[order]
    src_s = src_flat[order]
    dst_s = dst_flat[order]
    n_cols = int(math.ceil(t_max))
    for j in range(n_cols):
        hi = min(float(j + 1), float(t_max))
        n = int(np.searchsorted(act_s, hi, side="left"))
        cur = float(j)
        while pending and pending[0] <= hi:
            c = pending.pop(0)
            _engine_nb.column_apply(keys_s[:n], act_s[:n], eid_s[:n], src_s[:n],
                                    dst_s[:n], j, cur, c, comp, hg, hc,
                                    hostile_needed)
            cur = c
            take_snapshot(c)
        _engine_nb.column_apply(keys_s[:n], act_s[:n], eid_s[:n], src_s[:n],
                                dst_s[:n], j, cur, hi, comp, hg, hc,
                                hostile_needed)


def coupled_run(seed: int, kinds: Sequence[ModelKind], t_max: float,
                checkpoint_times: Sequence[float] | None = None,
                box_side: int | None = None,
                engine: str = "auto") -> SnapshotSeries:
    """Advance all requested models through the identical arrow stream.

    At every checkpoint the coupling identities hold exactly: the
    occupied set equals red union blue, the hostile-growth black set is
    contained in it and equals the union of the hostile-competition
    colored sets, and each hostile colored set is contained in its
    competition counterpart.

    `engine` selects the JIT event pipeline ("numba", the default when
    available) or the vectorized reference pipeline ("numpy"); both
    produce bit-identical series.
    """
    kinds = tuple(ModelKind(k) for k in kinds)
    if not kinds:
        raise ValueError("kinds must be non-empty")
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    L = default_box_side(t_max) if box_side is None else int(box_side)
    if L < 1:
        raise ValueError(f"box_side={L} too small: the box must contain (1,0) and (0,1)")
    if checkpoint_times is None:
        checkpoint_times = [t_max]
    checkpoints = [float(c) for c in checkpoint_times]
    if sorted(checkpoints) != checkpoints or len(set(checkpoints)) != len(checkpoints):
        raise ValueError("checkpoint times must be strictly increasing")
    if checkpoints and (checkpoints[0] < 0 or checkpoints[-1] > t_max):
        raise ValueError("checkpoint times must lie in [0, t_max]")
    if engine == "auto":
        engine = "numba" if _numba_available() else "numpy"
    if engine not in ("numba", "numpy"):
        raise ValueError(f"unknown engine {engine!r}")

    from quadcomp._kernels import apply_events

    keys_e, keys_n = _edge_key_grids(seed, L)
    if engine == "numba":
        from quadcomp import _engine_nb

        occ = _engine_nb.occupation_sweep(keys_e, keys_n, L, float(t_max))
    else:
        occ = _occupation_sweep(keys_e, keys_n, L, t_max)
    sx, sy, d, activation = _active_edges(occ, t_max, L)
    keys = np.where(d == 0, keys_e[sx, sy], keys_n[sx, sy])
    tx = (sx + (d == 0)).astype(np.int64)
    ty = (sy + (d == 1)).astype(np.int64)
    eid = (sx.astype(np.int64) * (L + 1) + sy) * 2 + d
    src_flat = (sx.astype(np.int64) * (L + 1) + sy).astype(np.int32)
    dst_flat = (tx * (L + 1) + ty).astype(np.int32)

    comp, hg, hc = _init_arrays(L)
    series: list[tuple[float, dict[ModelKind, LatticeState]]] = []

    def take_snapshot(time: float) -> None:
        series.append((time, {k: _snapshot(k, time, L, occ, comp, hg, hc)
                              for k in kinds}))

    pending = list(checkpoints)
    while pending and pending[0] == 0.0:
        take_snapshot(0.0)
        pending.pop(0)

    if engine == "numba":
        hostile_needed = any(k.is_hostile for k in kinds)
        _drive_numba(keys, activation, eid, src_flat, dst_flat, t_max,
                     pending, comp, hg, hc, take_snapshot, hostile_needed)
    else:
        for b, times, rows in _chunks_numpy(keys, activation, t_max):
            if times.size > 1 and np.any(times[1:] == times[:-1]):
                order = _order_events(times, sx[rows], sy[rows], d[rows])
                times, rows = times[order], rows[order]
            start = 0
            while pending and pending[0] <= b:
                c = pending.pop(0)
                idx = int(np.searchsorted(times, c, side="right"))
                apply_events(src_flat[rows[start:idx]],
                             dst_flat[rows[start:idx]], comp, hg, hc)
                start = idx
                take_snapshot(c)
            apply_events(src_flat[rows[start:]], dst_flat[rows[start:]],
                         comp, hg, hc)
    for c in pending:
        take_snapshot(c)

    truncated = bool(np.any(occ[L, :] <= t_max) or np.any(occ[:, L] <= t_max))
    return SnapshotSeries(seed=seed, kinds=kinds, box_side=L, t_max=float(t_max),
                          checkpoints=series, truncated=truncated)


def _numba_available() -> bool:
    from quadcomp._kernels import BACKEND

    return BACKEND == "numba"


def run(seed: int, kind: ModelKind, t_max: float,
        checkpoint_times: Sequence[float] | None = None,
        box_side: int | None = None) -> SnapshotSeries:
    """Single-model run; see `coupled_run`."""
    return coupled_run(seed, [ModelKind(kind)], t_max, checkpoint_times, box_side)


def fattened_contains(state: LatticeState, point: tuple[float, float],
                      half_width: float = 0.5,
                      states: Iterable[CellState] | None = None) -> bool:
    """Whether a real point lies in the fattened colored set.

    True iff some site in the queried states (default: the model's
    occupied/colored set) is within L-infinity distance `half_width`.
    """
    sites = state.sites_with(states if states is not None else
                             state.kind.colored_states)
    if len(sites) == 0:
        return False
    dx = np.abs(sites[:, 0] - point[0])
    dy = np.abs(sites[:, 1] - point[1])
    return bool(np.any(np.maximum(dx, dy) <= half_width))


# --------------------------------------------------------------------------
# snapshot CSV export / import
# --------------------------------------------------------------------------

def snapshot_to_csv(state: LatticeState, fp: TextIO) -> int:
    """Write non-default cells as x,y,state lines, sorted by (x, y)."""
    fp.write("x,y,state\n")
    n = 0
    for x, y, v in zip(state._xs, state._ys, state._vals):
        fp.write(f"{x},{y},{CellState(int(v)).label}\n")
        n += 1
    return n


def snapshot_from_csv(fp: TextIO, kind: ModelKind, time: float,
                      box_side: int) -> LatticeState:
    header = fp.readline().strip()
    if header != "x,y,state":
        raise ValueError(f"unexpected snapshot header {header!r}")
    cells: dict[tuple[int, int], CellState] = {}
    for line in fp:
        line = line.strip()
        if not line:
            continue
        xs, ys, label = line.split(",")
        cells[(int(xs), int(ys))] = _STATE_BY_LABEL[label]
    return LatticeState.from_cells(ModelKind(kind), time, box_side, cells)


def manifest_dict(series: SnapshotSeries) -> dict:
    return {
        "seed": series.seed,
        "kinds": [k.value for k in series.kinds],
        "t_max": series.t_max,
        "box_side": series.box_side,
        "checkpoint_times": [t for t, _ in series.checkpoints],
        "truncated": series.truncated,
    }
