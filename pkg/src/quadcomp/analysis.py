"""Geometric verification layer.

Regions are predicates on the scaled plane (site coordinates divided by
time).  `margin` is the L-infinity inradius: the largest half-width of
a sup-norm ball around the point that stays inside the region, so
intersections take the minimum and scaling is linear.  Containment
checks test lattice sites whose scaled position lies at least a margin
deep inside a region; shape extraction, angular-arc detection around
the scaled corner (1,1)*t, and the enclosing-circle curvature
diagnostic all consume engine snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence, TextIO

import numpy as np

from quadcomp.models import (
    CellState,
    LatticeState,
    ModelKind,
    SnapshotSeries,
)

_CORNER = (1.0, 1.0)


# --------------------------------------------------------------------------
# regions
# --------------------------------------------------------------------------

def _dist_inf_to_ray(px, py, ox, oy, dx, dy):
    """L-infinity distance from points to the ray o + s*d, s >= 0."""
    a = np.asarray(px, dtype=float) - ox
    b = np.asarray(py, dtype=float) - oy
    cands = [np.zeros_like(a)]
    if dx != 0:
        cands.append(a / dx)
    if dy != 0:
        cands.append(b / dy)
    if dx != dy:
        cands.append((a - b) / (dx - dy))
    if dx + dy != 0:
        cands.append((a + b) / (dx + dy))
    best = np.full_like(a, np.inf)
    for s in cands:
        s = np.maximum(s, 0.0)
        f = np.maximum(np.abs(a - s * dx), np.abs(b - s * dy))
        best = np.minimum(best, f)
    return best


def _dist_inf_to_unit_square(px, py):
    """L-infinity distance from points to the closed unit square."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    return np.maximum.reduce([px - 1.0, -px, py - 1.0, -py,
                              np.zeros_like(px)])


class Region:
    """Base region: membership and L-infinity inradius on scaled points."""

    name: str = "region"

    def contains(self, px, py):
        raise NotImplementedError

    def margin(self, px, py):
        raise NotImplementedError

    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) hull in scaled coordinates (may be inf)."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.name


class UnitSquare(Region):
    name = "unit-square"

    def contains(self, px, py):
        px, py = np.asarray(px), np.asarray(py)
        return (px >= 0) & (px <= 1) & (py >= 0) & (py <= 1)

    def margin(self, px, py):
        px, py = np.asarray(px, dtype=float), np.asarray(py, dtype=float)
        return np.minimum.reduce([px, 1.0 - px, py, 1.0 - py])

    def bounds(self):
        return (0.0, 1.0, 0.0, 1.0)


class HalfSquare(Region):
    """The part of the unit square strictly above or below the diagonal."""

    def __init__(self, part: str):
        if part not in ("above", "below"):
            raise ValueError("part must be 'above' or 'below'")
        self.part = part
        self.name = f"half-square-{part}"

    def contains(self, px, py):
        px, py = np.asarray(px), np.asarray(py)
        inside = (px >= 0) & (px <= 1) & (py >= 0) & (py <= 1)
        return inside & ((py > px) if self.part == "above" else (py < px))

    def margin(self, px, py):
        px, py = np.asarray(px, dtype=float), np.asarray(py, dtype=float)
        if self.part == "above":
            return np.minimum.reduce([px, 1.0 - py, (py - px) / 2.0])
        return np.minimum.reduce([py, 1.0 - px, (px - py) / 2.0])

    def bounds(self):
        return (0.0, 1.0, 0.0, 1.0)


class DiagonalBand(Region):
    """Open half-plane at offset c from the diagonal: x-y > c or y-x > c."""

    def __init__(self, part: str, c: float = 0.0):
        if part not in ("k1", "k2"):
            raise ValueError("part must be 'k1' (x-y>c) or 'k2' (y-x>c)")
        self.part = part
        self.c = float(c)
        self.name = f"band-{part}({self.c:g})"

    def contains(self, px, py):
        px, py = np.asarray(px), np.asarray(py)
        return (px - py > self.c) if self.part == "k1" else (py - px > self.c)

    def margin(self, px, py):
        px, py = np.asarray(px, dtype=float), np.asarray(py, dtype=float)
        diff = px - py if self.part == "k1" else py - px
        return (diff - self.c) / 2.0

    def bounds(self):
        return (-np.inf, np.inf, -np.inf, np.inf)


class Cone(Region):
    """Directions within (-pi/2 + eps, pi - eps) around the corner (1,1)."""

    def __init__(self, eps: float):
        if not (0 < eps < math.pi / 4):
            raise ValueError("eps must lie in (0, pi/4)")
        self.eps = float(eps)
        self.name = f"cone({self.eps:g})"
        self._lo = -math.pi / 2 + self.eps
        self._hi = math.pi - self.eps

    def contains(self, px, py):
        px, py = np.asarray(px, dtype=float), np.asarray(py, dtype=float)
        ang = np.arctan2(py - _CORNER[1], px - _CORNER[0])
        at_root = (px == _CORNER[0]) & (py == _CORNER[1])
        return (~at_root) & (ang > self._lo) & (ang < self._hi)

    def margin(self, px, py):
        d1 = _dist_inf_to_ray(px, py, *_CORNER,
                              math.cos(self._lo), math.sin(self._lo))
        d2 = _dist_inf_to_ray(px, py, *_CORNER,
                              math.cos(self._hi), math.sin(self._hi))
        return np.minimum(d1, d2)

    def bounds(self):
        return (-np.inf, np.inf, -np.inf, np.inf)


def _angdiff(a, b):
    return (np.asarray(a) - b + math.pi) % (2 * math.pi) - math.pi


class SectorRegion(Region):
    """Angular sector rooted at (1,1), excluded from the open unit square."""

    def __init__(self, center: tuple[float, float], rho: float):
        if rho <= 0:
            raise ValueError("rho must be > 0")
        cx, cy = center
        if (cx, cy) == _CORNER:
            raise ValueError("sector center cannot be the root (1,1)")
        self.center = (float(cx), float(cy))
        self.rho = float(rho)
        self.center_angle = math.atan2(cy - _CORNER[1], cx - _CORNER[0])
        self.name = f"sector({self.center_angle:.3f},{self.rho:g})"

    def contains(self, px, py):
        px, py = np.asarray(px, dtype=float), np.asarray(py, dtype=float)
        ang = np.arctan2(py - _CORNER[1], px - _CORNER[0])
        in_wedge = np.abs(_angdiff(ang, self.center_angle)) < self.rho / 2
        at_root = (px == _CORNER[0]) & (py == _CORNER[1])
        in_open_square = (px > 0) & (px < 1) & (py > 0) & (py < 1)
        return (~at_root) & in_wedge & (~in_open_square)

    def margin(self, px, py):
        lo = self.center_angle - self.rho / 2
        hi = self.center_angle + self.rho / 2
        d1 = _dist_inf_to_ray(px, py, *_CORNER, math.cos(lo), math.sin(lo))
        d2 = _dist_inf_to_ray(px, py, *_CORNER, math.cos(hi), math.sin(hi))
        return np.minimum.reduce([d1, d2, _dist_inf_to_unit_square(px, py)])

    def bounds(self):
        return (-np.inf, np.inf, -np.inf, np.inf)


class Scaled(Region):
    """The region dilated about the origin by a positive factor."""

    def __init__(self, inner: Region, factor: float):
        if factor <= 0:
            raise ValueError("factor must be > 0")
        self.inner = inner
        self.factor = float(factor)
        self.name = f"scaled({inner.name},{self.factor:g})"

    def contains(self, px, py):
        return self.inner.contains(np.asarray(px) / self.factor,
                                   np.asarray(py) / self.factor)

    def margin(self, px, py):
        return self.factor * self.inner.margin(np.asarray(px) / self.factor,
                                               np.asarray(py) / self.factor)

    def bounds(self):
        return tuple(v * self.factor for v in self.inner.bounds())


class Intersection(Region):
    """Intersection; the inradius is the minimum of the member inradii."""

    def __init__(self, *regions: Region):
        if not regions:
            raise ValueError("need at least one region")
        self.regions = regions
        self.name = " & ".join(r.name for r in regions)

    def contains(self, px, py):
        out = self.regions[0].contains(px, py)
        for r in self.regions[1:]:
            out = out & r.contains(px, py)
        return out

    def margin(self, px, py):
        out = np.asarray(self.regions[0].margin(px, py), dtype=float)
        for r in self.regions[1:]:
            out = np.minimum(out, r.margin(px, py))
        return out

    def bounds(self):
        bs = [r.bounds() for r in self.regions]
        return (max(b[0] for b in bs), min(b[1] for b in bs),
                max(b[2] for b in bs), min(b[3] for b in bs))


# --------------------------------------------------------------------------
# containment checks
# --------------------------------------------------------------------------

@dataclass
class ContainmentReport:
    region: str
    color: CellState
    t: float
    delta: float
    tested_sites: int
    violating_sites: list[tuple[int, int]]
    status: str  # "ok" or "inconclusive"

    @property
    def passed(self) -> bool:
        return not self.violating_sites

    @property
    def violation_rate(self) -> float:
        if self.tested_sites == 0:
            return 0.0
        return len(self.violating_sites) / self.tested_sites

    def as_dict(self) -> dict:
        return {
            "region": self.region,
            "color": self.color.label,
            "t": self.t,
            "delta": self.delta,
            "tested_sites": self.tested_sites,
            "violating_sites": [list(v) for v in self.violating_sites],
            "violation_rate": self.violation_rate,
            "pass": self.passed,
            "status": self.status,
        }


def check_containment(snapshot: LatticeState, color: CellState, region: Region,
                      t: float, delta: float) -> ContainmentReport:
    """Require every lattice site at least delta inside region*t to hold color.

    Sites are tested where their scaled position lies in the region with
    L-infinity boundary margin at least delta (region points at lattice
    sites are covered exactly by the site's own state under the
    half-width fattening convention).  Too small a scale (t*delta < 2)
    cannot separate sites from the boundary and yields an inconclusive
    report.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    if t * delta < 2:
        return ContainmentReport(region.name, color, t, delta, 0, [],
                                 status="inconclusive")
    L = snapshot.box_side
    xmin, xmax, ymin, ymax = region.bounds()
    x_lo = max(0, int(math.floor(max(xmin, 0.0) * t)))
    y_lo = max(0, int(math.floor(max(ymin, 0.0) * t)))
    x_hi = min(L, int(math.ceil(min(xmax, L / t) * t)))
    y_hi = min(L, int(math.ceil(min(ymax, L / t) * t)))
    if x_hi < x_lo or y_hi < y_lo:
        return ContainmentReport(region.name, color, t, delta, 0, [],
                                 status="inconclusive")
    xs = np.arange(x_lo, x_hi + 1)
    ys = np.arange(y_lo, y_hi + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    px, py = gx / t, gy / t
    tested = region.contains(px, py) & (region.margin(px, py) >= delta)
    tested[(gx == 0) & (gy == 0)] = False
    # dense state lookup over the window
    grid = np.full(gx.shape, int(snapshot.kind.default_state), dtype=np.int8)
    cx, cy, cv = snapshot.arrays()
    inb = (cx >= x_lo) & (cx <= x_hi) & (cy >= y_lo) & (cy <= y_hi)
    grid[cx[inb] - x_lo, cy[inb] - y_lo] = cv[inb]
    bad = tested & (grid != int(color))
    viol = [(int(x), int(y)) for x, y in zip(gx[bad], gy[bad])]
    return ContainmentReport(region.name, color, t, delta,
                             int(tested.sum()), viol, status="ok")


# --------------------------------------------------------------------------
# shape extraction
# --------------------------------------------------------------------------

@dataclass
class ShapeEstimate:
    """Radial profile of a scaled occupied set, averaged over replicates."""

    kind: ModelKind
    angles: np.ndarray        # bin centers in [0, pi/2]
    radii: np.ndarray         # mean boundary radius per angle (nan if empty)
    stddev: np.ndarray        # across replicates
    replicates: int

    def to_csv(self, fp: TextIO) -> int:
        fp.write("theta,radius,stddev\n")
        for th, r, s in zip(self.angles, self.radii, self.stddev):
            fp.write(f"{th:.17g},{r:.17g},{s:.17g}\n")
        return len(self.angles)


def square_profile(angles: np.ndarray) -> np.ndarray:
    """Radial function of the unit square from the origin."""
    a = np.asarray(angles, dtype=float)
    return 1.0 / np.maximum(np.cos(a), np.sin(a))


def shape_from_snapshots(series: SnapshotSeries | Sequence[SnapshotSeries],
                         kind: ModelKind, n_angles: int = 256) -> ShapeEstimate:
    """Scaled boundary radius per angle from final checkpoints.

    Truncated runs are rejected: a clipped cluster would bias the
    profile invisibly.
    """
    series_list = [series] if isinstance(series, SnapshotSeries) else list(series)
    if not series_list:
        raise ValueError("need at least one series")
    kind = ModelKind(kind)
    edges = np.linspace(0.0, math.pi / 2, n_angles + 1)
    centers = (edges[:-1] + edges[1:]) / 2
    profiles = np.full((len(series_list), n_angles), np.nan)
    for i, s in enumerate(series_list):
        if s.truncated:
            raise ValueError(f"series for seed {s.seed} is truncated")
        t, states = s.checkpoints[-1]
        if t <= 0:
            raise ValueError("final checkpoint must have t > 0")
        sites = states[kind].colored_sites()
        if len(sites) == 0:
            continue
        ang = np.arctan2(sites[:, 1], sites[:, 0])
        rad = np.hypot(sites[:, 0], sites[:, 1]) / t
        idx = np.clip(np.digitize(ang, edges) - 1, 0, n_angles - 1)
        prof = np.full(n_angles, -np.inf)
        np.maximum.at(prof, idx, rad)
        prof[np.isinf(prof)] = np.nan
        profiles[i] = prof
    with np.errstate(invalid="ignore"), np.testing.suppress_warnings() as sup:
        sup.filter(RuntimeWarning)
        radii = np.nanmean(profiles, axis=0)
        stdev = np.nanstd(profiles, axis=0)
    return ShapeEstimate(kind=kind, angles=centers, radii=radii, stddev=stdev,
                         replicates=len(series_list))


def shape_from_mu(angles: Sequence[float], mu_values: Sequence[float],
                  kind: ModelKind = ModelKind.RICHARDSON) -> ShapeEstimate:
    """Profile induced by growth-rate estimates: radius = 1/mu per angle."""
    a = np.asarray(angles, dtype=float)
    m = np.asarray(mu_values, dtype=float)
    if np.any(m <= 0):
        raise ValueError("mu values must be positive")
    return ShapeEstimate(kind=ModelKind(kind), angles=a, radii=1.0 / m,
                         stddev=np.zeros_like(a), replicates=0)


# --------------------------------------------------------------------------
# angular sectors around the scaled corner
# --------------------------------------------------------------------------

_ARC_RANGE = (-math.pi / 2, math.pi)


@dataclass
class Arc:
    start: float
    end: float
    color: CellState

    @property
    def measure(self) -> float:
        return self.end - self.start

    def overlap(self, other: "Arc") -> float:
        return max(0.0, min(self.end, other.end) - max(self.start, other.start))

    def as_dict(self) -> dict:
        return {"start": self.start, "end": self.end,
                "color": self.color.label, "measure": self.measure}


@dataclass
class SectorReport:
    time: float
    root: tuple[float, float]
    arcs: list[Arc]
    uncovered_measure: float
    outer_range: float
    bins: int
    min_measure: float
    annulus: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "time": self.time,
            "root": list(self.root),
            "arcs": [a.as_dict() for a in self.arcs],
            "uncovered_measure": self.uncovered_measure,
            "outer_range": self.outer_range,
            "bins": self.bins,
            "min_measure": self.min_measure,
            "annulus": list(self.annulus),
        }


def sector_arcs(snapshot: LatticeState, t: float,
                annulus: tuple[float, float] = (0.05, 2.0),
                min_measure: float = 0.2, bins: int = 1024) -> SectorReport:
    """Maximal monochromatic angular arcs around (1,1)*t, outside the square.

    Occupied sites with a coordinate beyond t and scaled distance from
    the root inside the annulus are binned by angle (1024 bins by
    default); a bin takes the strict majority color, ties make it mixed,
    and arcs are maximal runs of equal-color bins with measure at least
    min_measure.  Bookkeeping is exact: kept arc measure plus uncovered
    measure equals the nonempty angular range.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    r0, r1 = annulus
    if not (0 <= r0 < r1):
        raise ValueError("annulus radii must satisfy 0 <= r0 < r1")
    width = (_ARC_RANGE[1] - _ARC_RANGE[0]) / bins
    red = snapshot.sites_with({CellState.RED})
    blue = snapshot.sites_with({CellState.BLUE})
    counts = np.zeros((2, bins), dtype=np.int64)
    for row, sites in enumerate((red, blue)):
        if len(sites) == 0:
            continue
        outside = (sites[:, 0] > t) | (sites[:, 1] > t)
        sel = sites[outside]
        if len(sel) == 0:
            continue
        dx = sel[:, 0] - t
        dy = sel[:, 1] - t
        dist = np.hypot(dx, dy) / t
        ring = (dist >= r0) & (dist <= r1)
        sel = sel[ring]
        if len(sel) == 0:
            continue
        ang = np.arctan2(sel[:, 1] - t, sel[:, 0] - t)
        idx = np.clip(((ang - _ARC_RANGE[0]) / width).astype(int), 0, bins - 1)
        np.add.at(counts[row], idx, 1)
    nred, nblue = counts
    # -1 empty, 0 red, 1 blue, 2 mixed
    code = np.full(bins, -1, dtype=np.int8)
    code[(nred > 0) & (nred > nblue)] = 0
    code[(nblue > 0) & (nblue > nred)] = 1
    code[(nred > 0) & (nred == nblue)] = 2
    outer_range = float(np.sum(code >= 0)) * width
    arcs: list[Arc] = []
    covered = 0.0
    i = 0
    while i < bins:
        c = code[i]
        if c in (0, 1):
            j = i
            while j + 1 < bins and code[j + 1] == c:
                j += 1
            measure = (j - i + 1) * width
            if measure >= min_measure:
                arcs.append(Arc(
                    start=_ARC_RANGE[0] + i * width,
                    end=_ARC_RANGE[0] + (j + 1) * width,
                    color=CellState.RED if c == 0 else CellState.BLUE))
                covered += measure
            i = j + 1
        else:
            i += 1
    return SectorReport(time=float(t), root=(float(t), float(t)), arcs=arcs,
                        uncovered_measure=outer_range - covered,
                        outer_range=outer_range, bins=bins,
                        min_measure=min_measure, annulus=(float(r0), float(r1)))


@dataclass
class ArcMatch:
    arc_from: Arc
    arc_to: Arc | None
    overlap_fraction: float
    survived: bool
    drift_start: float
    drift_end: float

    def as_dict(self) -> dict:
        return {
            "arc_from": self.arc_from.as_dict(),
            "arc_to": self.arc_to.as_dict() if self.arc_to else None,
            "overlap_fraction": self.overlap_fraction,
            "survived": self.survived,
            "drift_start": self.drift_start,
            "drift_end": self.drift_end,
        }


@dataclass
class StabilityReport:
    t_from: float
    t_to: float
    matches: list[ArcMatch]

    @property
    def survivors(self) -> int:
        return sum(m.survived for m in self.matches)

    def as_dict(self) -> dict:
        return {"t_from": self.t_from, "t_to": self.t_to,
                "survivors": self.survivors,
                "matches": [m.as_dict() for m in self.matches]}


def sector_stability(series: SnapshotSeries, t_from: float, t_to: float,
                     min_measure: float = 0.2,
                     kind: ModelKind = ModelKind.COMPETITION,
                     annulus: tuple[float, float] = (0.05, 2.0),
                     bins: int = 1024,
                     overlap_threshold: float = 0.8) -> StabilityReport:
    """Match arcs across two checkpoints and report drift and survival.

    An arc survives when a same-color arc at the later time overlaps at
    least `overlap_threshold` of its angular measure.
    """
    rep_a = sector_arcs(series.at(t_from, kind), t_from, annulus, min_measure,
                        bins)
    rep_b = sector_arcs(series.at(t_to, kind), t_to, annulus, min_measure,
                        bins)
    matches: list[ArcMatch] = []
    for a in rep_a.arcs:
        best: Arc | None = None
        best_ov = 0.0
        for b in rep_b.arcs:
            if b.color != a.color:
                continue
            ov = a.overlap(b)
            if ov > best_ov:
                best, best_ov = b, ov
        frac = best_ov / a.measure if a.measure > 0 else 0.0
        matches.append(ArcMatch(
            arc_from=a, arc_to=best, overlap_fraction=frac,
            survived=frac >= overlap_threshold,
            drift_start=abs(best.start - a.start) if best else math.nan,
            drift_end=abs(best.end - a.end) if best else math.nan))
    return StabilityReport(t_from=float(t_from), t_to=float(t_to),
                           matches=matches)


# --------------------------------------------------------------------------
# curvature diagnostic
# --------------------------------------------------------------------------

@dataclass
class CurvatureReport:
    """Per-angle enclosing-circle radii; report-only, never pass/fail."""

    angles: np.ndarray
    circumradii: np.ndarray
    flat: np.ndarray
    radius_cap: float

    def as_dict(self) -> dict:
        return {
            "angles": [float(a) for a in self.angles],
            "circumradii": [float(r) for r in self.circumradii],
            "flat": [bool(f) for f in self.flat],
            "radius_cap": self.radius_cap,
        }


def curvature_diagnostic(shape: ShapeEstimate, eps: float,
                         radius_cap: float = 50.0) -> CurvatureReport:
    """Circle through each boundary triple inside the cone; flag flats.

    Collinear triples and circles above the cap are flagged as flat.
    This is a diagnostic for an unproved hypothesis; nothing is
    asserted.
    """
    cone = Cone(eps)
    good = np.isfinite(shape.radii)
    px = shape.radii * np.cos(shape.angles)
    py = shape.radii * np.sin(shape.angles)
    inside = np.zeros_like(good)
    inside[good] = cone.contains(px[good], py[good])
    idx = np.nonzero(inside)[0]
    if len(idx) < 32:
        raise ValueError(
            f"need >= 32 profile samples inside the cone, got {len(idx)}")
    angles, radii, flats = [], [], []
    for k in range(1, len(idx) - 1):
        i0, i1, i2 = idx[k - 1], idx[k], idx[k + 1]
        ax, ay = px[i0], py[i0]
        bx, by = px[i1], py[i1]
        cx, cy = px[i2], py[i2]
        area2 = abs((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
        la = math.hypot(bx - ax, by - ay)
        lb = math.hypot(cx - bx, cy - by)
        lc = math.hypot(cx - ax, cy - ay)
        if area2 < 1e-12:
            r = math.inf
        else:
            r = la * lb * lc / (2 * area2)
        angles.append(shape.angles[i1])
        radii.append(r)
        flats.append(not math.isfinite(r) or r > radius_cap)
    return CurvatureReport(angles=np.asarray(angles),
                           circumradii=np.asarray(radii),
                           flat=np.asarray(flats, dtype=bool),
                           radius_cap=radius_cap)


# --------------------------------------------------------------------------
# raster rendering
# --------------------------------------------------------------------------

PPM_COLORS = {
    CellState.RED: (220, 40, 40),
    CellState.BLUE: (40, 60, 220),
    CellState.BLACK: (0, 0, 0),
    CellState.WHITE: (255, 255, 255),
    CellState.VACANT: (245, 245, 245),
}


def render_ppm(snapshot: LatticeState, fp: BinaryIO) -> None:
    """Binary P6 raster, one pixel per site, origin at the bottom left."""
    L = snapshot.box_side
    n = L + 1
    img = np.empty((n, n, 3), dtype=np.uint8)
    img[:, :] = PPM_COLORS[snapshot.kind.default_state]
    for (x, y), state in snapshot.cells.items():
        img[y, x] = PPM_COLORS[state]
    fp.write(f"P6\n{n} {n}\n255\n".encode())
    fp.write(img[::-1].tobytes())
