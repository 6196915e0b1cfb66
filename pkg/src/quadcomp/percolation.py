"""The shared arrow structure: rate-1 Poisson arrows on directed lattice edges.

Every directed edge ``x -> x+(1,0)`` (East) or ``x -> x+(0,1)`` (North)
with source in the first quadrant, except the origin which has no
outgoing edges, carries an independent rate-1 Poisson process.  All
models in this package are driven by the same arrow structure, which is
a pure function of the master seed, so couplings between models are
exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from quadcomp import rng


class Direction(IntEnum):
    EAST = 0
    NORTH = 1

    @property
    def step(self) -> tuple[int, int]:
        return (1, 0) if self is Direction.EAST else (0, 1)

    @property
    def letter(self) -> str:
        return "E" if self is Direction.EAST else "N"


class Site(NamedTuple):
    x: int
    y: int


class DirectedEdge(NamedTuple):
    source: Site
    direction: Direction

    @property
    def target(self) -> Site:
        dx, dy = self.direction.step
        return Site(self.source[0] + dx, self.source[1] + dy)


class ArrowEvent(NamedTuple):
    time: float
    edge: DirectedEdge


def make_edge(x: int, y: int, direction: Direction) -> DirectedEdge:
    if x < 0 or y < 0:
        raise ValueError(f"edge source ({x},{y}) outside the first quadrant")
    if (x, y) == (0, 0):
        raise ValueError("the origin has no outgoing edges")
    return DirectedEdge(Site(x, y), Direction(direction))


@dataclass(frozen=True)
class EventWindow:
    """Finite truncation of the arrow structure: box [0,L]^2 up to a horizon."""

    box_side: int
    horizon: float
    seed: int

    def __post_init__(self) -> None:
        if self.box_side < 1:
            raise ValueError("box_side must be >= 1")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")

    def contains(self, site: tuple[int, int]) -> bool:
        return 0 <= site[0] <= self.box_side and 0 <= site[1] <= self.box_side

    def edges(self) -> Iterable[DirectedEdge]:
        """All edges with source and target inside the box, source != origin.

        Enumeration order is lexicographic (x, y, direction); the same
        order breaks ties in merged event streams.
        """
        L = self.box_side
        for x in range(L + 1):
            for y in range(L + 1):
                if (x, y) == (0, 0):
                    continue
                if x < L:
                    yield DirectedEdge(Site(x, y), Direction.EAST)
                if y < L:
                    yield DirectedEdge(Site(x, y), Direction.NORTH)


def edge_key(seed: int, edge: DirectedEdge) -> int:
    (x, y), d = edge
    return rng.derive_key(seed, rng.DOMAIN_ARROWS, x, y, int(d))


def edge_events(seed: int, edge: DirectedEdge, horizon: float) -> np.ndarray:
    """Event times of one edge in (0, horizon], strictly increasing.

    Pure function of (seed, edge, horizon); extending the horizon only
    appends events.
    """
    if edge.source == (0, 0):
        raise ValueError("the origin has no outgoing edges")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    key = edge_key(seed, edge)
    return rng.events_in_interval(key, 0.0, horizon)


def window_events(window: EventWindow) -> list[ArrowEvent]:
    """The merged, time-ordered arrow stream of a window.

    Ties (which have probability zero) are broken by the edge order
    (source_x, source_y, direction).  Each call returns a fresh list.
    """
    out: list[ArrowEvent] = []
    for edge in window.edges():
        for t in edge_events(window.seed, edge, window.horizon):
            out.append(ArrowEvent(float(t), edge))
    out.sort(key=_event_order)
    return out


def _event_order(ev: ArrowEvent) -> tuple[float, int, int, int]:
    (x, y), d = ev.edge
    return (ev.time, x, y, int(d))


def inbound_edges(window: EventWindow, site: tuple[int, int]) -> list[DirectedEdge]:
    """The (at most two) in-box edges pointing into a site.

    (1,0) and (0,1) have none: their only candidate sources are the
    origin, which has no outgoing edges, or sites outside the quadrant.
    """
    x, y = site
    edges = []
    if x >= 1 and (x - 1, y) != (0, 0):
        edges.append(DirectedEdge(Site(x - 1, y), Direction.EAST))
    if y >= 1 and (x, y - 1) != (0, 0):
        edges.append(DirectedEdge(Site(x, y - 1), Direction.NORTH))
    return edges


def inbound_events(window: EventWindow, site: tuple[int, int]) -> list[ArrowEvent]:
    """Time-ordered arrows pointing into one site of the window."""
    if not window.contains(site):
        raise ValueError(f"site {site} outside box [0,{window.box_side}]^2")
    out: list[ArrowEvent] = []
    for edge in inbound_edges(window, site):
        for t in edge_events(window.seed, edge, window.horizon):
            out.append(ArrowEvent(float(t), edge))
    out.sort(key=_event_order)
    return out


def window_to_csv(window: EventWindow, fp: TextIO) -> int:
    """Debug dump: time,source_x,source_y,direction (17 significant digits)."""
    fp.write("time,source_x,source_y,direction\n")
    n = 0
    for ev in window_events(window):
        (x, y), d = ev.edge
        fp.write(f"{ev.time:.17g},{x},{y},{Direction(d).letter}\n")
        n += 1
    return n


def count_window_edges(window: EventWindow) -> int:
    L = window.box_side
    # 2*L*(L+1) in-box edges, minus the origin's two outgoing ones
    return 2 * L * (L + 1) - 2


def mean_events_per_edge(window: EventWindow) -> float:
    return window.horizon
