"""Reverse-time queries on the arrow structure.

Every vertex at every time has a unique admissible path backward
through the arrows: descend the timeline and jump across every inbound
arrow encountered.  Its endpoint at time zero determines the color of
the hostile-environment models.  The competition color follows from a
backward recursion over inbound arrows, and the potential-ancestor set
from reverse reachability.  All three agree exactly with the forward
engines on the same seed; tests assert this with no tolerance.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from heapq import heappush, heappop
from typing import TextIO

import numpy as np

from quadcomp import rng
from quadcomp.models import CellState, LatticeState, ModelKind, init_default
from quadcomp.percolation import (
    Direction,
    EventWindow,
    Site,
    edge_key,
    inbound_edges,
)


@dataclass(frozen=True)
class VoterPathTrace:
    """The unique admissible reverse path from (site, time) to time 0.

    Segments run backward in time: each is (site, t_enter, t_exit) with
    t_enter > t_exit, consecutive segments joined exactly at inbound
    arrow times, and no inbound arrow inside any segment's open
    interval.
    """

    origin: tuple[Site, float]
    segments: tuple[tuple[Site, float, float], ...]
    terminus: Site


@dataclass(frozen=True)
class AncestorSet:
    """Time-0 positions of all attached reverse paths from (site, time)."""

    origin: tuple[Site, float]
    members: frozenset[Site]


class DualWindow:
    """Reverse-time query engine over one event window.

    Caches per-site inbound arrow lists; all queries are pure functions
    of the window, so repeated computation returns identical results.
    Workers should construct their own instance (the memo caches are
    not locked).
    """

    def __init__(self, window: EventWindow):
        self.window = window
        self._inbox: dict[Site, tuple[list[float], list[Site]]] = {}
        self._memo: dict[tuple[Site, int], CellState] = {}

    # -- inbound arrows ----------------------------------------------------

    def inbound(self, site: tuple[int, int]) -> tuple[list[float], list[Site]]:
        """Times and sources of arrows into a site, ascending in time."""
        site = Site(*site)
        hit = self._inbox.get(site)
        if hit is not None:
            return hit
        events: list[tuple[float, Site]] = []
        for edge in inbound_edges(self.window, site):
            key = edge_key(self.window.seed, edge)
            for t in rng.events_in_interval(key, 0.0, self.window.horizon):
                events.append((float(t), edge.source))
        events.sort()
        times = [t for t, _ in events]
        sources = [w for _, w in events]
        self._inbox[site] = (times, sources)
        return times, sources

    # -- admissible reverse path -------------------------------------------

    def trace_voter_path(self, z: tuple[int, int], t: float) -> VoterPathTrace:
        """Descend from (z, t), jumping across every inbound arrow.

        The first step crosses arrows at times <= t (the state at t
        includes an arrow firing exactly at t); later steps cross
        strictly earlier arrows.
        """
        self._check_query(z, t)
        segments: list[tuple[Site, float, float]] = []
        site = Site(*z)
        cur = float(t)
        inclusive = True
        while True:
            times, sources = self.inbound(site)
            idx = (bisect_right(times, cur) if inclusive else
                   bisect_left(times, cur)) - 1
            if idx < 0:
                segments.append((site, cur, 0.0))
                return VoterPathTrace(origin=(Site(*z), float(t)),
                                      segments=tuple(segments),
                                      terminus=site)
            s = times[idx]
            segments.append((site, cur, s))
            site = sources[idx]
            cur = s
            inclusive = False

    def voter_color(self, z: tuple[int, int], t: float,
                    init: LatticeState) -> CellState:
        """Initial color of the admissible path's terminus.

        With the hostile-growth initial state this decides black vs
        white; with the hostile-competition one, red vs blue vs white.
        """
        return init.state_at(self.trace_voter_path(z, t).terminus)

    # -- competition color --------------------------------------------------

    def competition_color(self, z: tuple[int, int], t: float,
                          init: LatticeState | None = None,
                          max_visits: int = 50_000_000) -> CellState:
        """Color of (z, t) in the competition model, computed backward.

        Recursion: take the last inbound arrow (w -> z) at time s before
        the query time; if the source's color just before s is red or
        blue it wins, otherwise the site keeps the color it had just
        before s.  Memoized on (site, index of last processed inbound
        arrow); evaluated iteratively, so deep histories cannot blow the
        interpreter stack.  Raises RuntimeError beyond `max_visits`.
        """
        self._check_query(z, t)
        if init is None:
            init = init_default(ModelKind.COMPETITION, self.window.box_side)
        times, _ = self.inbound(z)
        top = (Site(*z), bisect_right(times, float(t)) - 1)
        memo = self._memo
        stack = [top]
        visits = 0
        while stack:
            visits += 1
            if visits > max_visits:
                raise RuntimeError(
                    f"competition_color exceeded {max_visits} visits; "
                    "raise max_visits for this horizon")
            site, j = stack[-1]
            if (site, j) in memo:
                stack.pop()
                continue
            if j < 0:
                memo[(site, j)] = init.state_at(site)
                stack.pop()
                continue
            times_z, sources_z = self.inbound(site)
            s = times_z[j]
            w = sources_z[j]
            times_w, _ = self.inbound(w)
            dep_w = (w, bisect_left(times_w, s) - 1)
            cw = memo.get(dep_w)
            if cw is None:
                stack.append(dep_w)
                continue
            if cw in (CellState.RED, CellState.BLUE):
                memo[(site, j)] = cw
                stack.pop()
                continue
            dep_prev = (site, j - 1)
            cprev = memo.get(dep_prev)
            if cprev is None:
                stack.append(dep_prev)
                continue
            memo[(site, j)] = cprev
            stack.pop()
        return memo[top]

    # -- reverse reachability -----------------------------------------------

    def potential_ancestors(self, z: tuple[int, int], t: float,
                            init: LatticeState | None = None) -> AncestorSet:
        """Initially occupied sites with a directed space-time path to (z, t).

        Reverse reachability with a monotone frontier: a site reachable
        at time s is reachable at every earlier time, so each site
        carries the latest time it joins the frontier, and inbound
        arrows below that time propagate the sweep.  Empty iff (z, t) is
        vacant in the forward competition run.
        """
        self._check_query(z, t)
        if init is None:
            init = init_default(ModelKind.COMPETITION, self.window.box_side)
        z = Site(*z)
        reach_time: dict[Site, float] = {z: float(t)}
        heap: list[tuple[float, int, int, int, int]] = []

        def push_inbound(site: Site, below: float, above: float) -> None:
            times, sources = self.inbound(site)
            lo = bisect_left(times, above)
            hi = bisect_right(times, below)
            for k in range(lo, hi):
                w = sources[k]
                heappush(heap, (-times[k], w.x, w.y, site.x, site.y))

        push_inbound(z, float(t), 0.0)
        while heap:
            neg_s, wx, wy, _, _ = heappop(heap)
            s = -neg_s
            w = Site(wx, wy)
            known = reach_time.get(w)
            if known is not None and known >= s:
                continue
            reach_time[w] = s
            push_inbound(w, s, 0.0 if known is None else known)
        members = frozenset(site for site in reach_time
                            if init.state_at(site) != init.kind.default_state)
        return AncestorSet(origin=(z, float(t)), members=members)

    # ------------------------------------------------------------------

    def _check_query(self, z: tuple[int, int], t: float) -> None:
        if not self.window.contains(z):
            raise ValueError(f"site {z} outside box [0,{self.window.box_side}]^2")
        if not (0.0 <= t <= self.window.horizon):
            raise ValueError(f"time {t} outside [0, {self.window.horizon}]")
        if tuple(z) == (0, 0):
            raise ValueError("the origin carries no particle")


# -- module-level conveniences (pure functions of the window) ---------------

def trace_voter_path(window: EventWindow, z: tuple[int, int],
                     t: float) -> VoterPathTrace:
    return DualWindow(window).trace_voter_path(z, t)


def voter_color(window: EventWindow, z: tuple[int, int], t: float,
                init: LatticeState) -> CellState:
    return DualWindow(window).voter_color(z, t, init)


def competition_color(window: EventWindow, z: tuple[int, int], t: float,
                      init: LatticeState | None = None) -> CellState:
    return DualWindow(window).competition_color(z, t, init)


def potential_ancestors(window: EventWindow, z: tuple[int, int], t: float,
                        init: LatticeState | None = None) -> AncestorSet:
    return DualWindow(window).potential_ancestors(z, t, init)


def trace_to_csv(trace: VoterPathTrace, fp: TextIO) -> int:
    """Debug export: site_x,site_y,t_enter,t_exit per segment."""
    fp.write("site_x,site_y,t_enter,t_exit\n")
    for (site, t_enter, t_exit) in trace.segments:
        fp.write(f"{site.x},{site.y},{t_enter:.17g},{t_exit:.17g}\n")
    return len(trace.segments)
