"""Matplotlib renderings of snapshots, profiles, walks, and sector reports.

Every report path writes a PNG next to its delimited output.  All
figures use the Agg backend and carry no timestamps, so reruns are
byte-identical.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from quadcomp.analysis import PPM_COLORS, ShapeEstimate, SectorReport, square_profile  # noqa: E402
from quadcomp.fpp import DiagonalWalkStats  # noqa: E402
from quadcomp.models import LatticeState  # noqa: E402

_SAVE_KW = dict(dpi=120, metadata={"Software": "quadcomp"})


def _finish(fig, path: str) -> None:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def snapshot_figure(snapshot: LatticeState, path: str) -> None:
    """Raster view of one configuration, origin at the bottom left."""
    L = snapshot.box_side
    n = L + 1
    img = np.empty((n, n, 3), dtype=np.uint8)
    img[:, :] = PPM_COLORS[snapshot.kind.default_state]
    xs, ys, vals = snapshot.arrays()
    for x, y, v in zip(xs, ys, vals):
        img[y, x] = PPM_COLORS[v]
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(img, origin="lower", interpolation="nearest",
              extent=(-0.5, n - 0.5, -0.5, n - 0.5))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{snapshot.kind.value} at t={snapshot.time:g}")
    _finish(fig, path)


def profile_figure(shape: ShapeEstimate, path: str,
                   show_square: bool = True) -> None:
    """Radial profile with the unit-square reference curve."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(shape.angles, shape.radii, lw=1.2, color="#202020",
            label=f"{shape.kind.value} profile")
    finite = np.isfinite(shape.radii) & np.isfinite(shape.stddev)
    ax.fill_between(shape.angles[finite],
                    (shape.radii - shape.stddev)[finite],
                    (shape.radii + shape.stddev)[finite],
                    alpha=0.25, color="#202020", lw=0)
    if show_square:
        ax.plot(shape.angles, square_profile(shape.angles), lw=1.0,
                ls="--", color="#b02020", label="unit square")
    ax.set_xlabel("angle from the x-axis (rad)")
    ax.set_ylabel("scaled boundary radius")
    ax.set_xlim(0, math.pi / 2)
    ax.legend(frameon=False)
    ax.set_title(f"radial profile ({shape.replicates} replicates)")
    _finish(fig, path)


def walk_figure(stats: DiagonalWalkStats, path: str) -> None:
    """Running mean of the block step times and displacement frequencies."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    k = np.arange(1, stats.k_max + 1)
    ax1.plot(k, stats.partial_sums / k, lw=1.0, color="#202020")
    ax1.axhline(1.0, ls="--", color="#b02020", lw=1.0)
    ax1.axhline(11 / 12, ls=":", color="#3050b0", lw=1.0)
    ax1.set_xlabel("step k")
    ax1.set_ylabel("S_k / k")
    ax1.set_title("mean block time vs 1 and 11/12")
    freqs = stats.displacement_frequencies()
    labels = ["(2,0)", "(1,1)", "(0,2)"]
    vals = [freqs[(2, 0)], freqs[(1, 1)], freqs[(0, 2)]]
    ax2.bar(labels, vals, color=["#b02020", "#202020", "#3050b0"])
    for ref in (0.25, 0.5):
        ax2.axhline(ref, ls="--", lw=0.8, color="#808080")
    ax2.set_ylabel("frequency")
    ax2.set_title("step displacements")
    _finish(fig, path)


def sector_figure(report: SectorReport, snapshot: LatticeState,
                  path: str) -> None:
    """Outer occupied sites by angle with the extracted arcs marked."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    t = report.time
    xs, ys, vals = snapshot.arrays()
    outside = (xs > t) | (ys > t)
    for code, color in ((1, "#b02020"), (2, "#3050b0")):
        sel = outside & (vals == code)
        if sel.any():
            ang = np.arctan2(ys[sel] - t, xs[sel] - t)
            rad = np.hypot(xs[sel] - t, ys[sel] - t) / t
            ax.plot(ang, rad, ".", ms=1.0, color=color, rasterized=True)
    for arc in report.arcs:
        c = "#b02020" if arc.color.label == "red" else "#3050b0"
        ax.hlines(0.02, arc.start, arc.end, colors=c, lw=4)
    ax.set_xlabel("angle around (1,1)t (rad)")
    ax.set_ylabel("scaled distance from root")
    ax.set_title(f"outer sectors at t={t:g} "
                 f"({len(report.arcs)} arcs, uncovered "
                 f"{report.uncovered_measure:.2f} rad)")
    _finish(fig, path)
