"""Verification suites tying the engines together.

Each suite returns a report dict with per-check entries.  Checks are
either exact (guaranteed identities whose failure means a bug; these
gate the CLI exit code) or statistical (desk-scale frequencies of the
limit statements; reported, never gated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from quadcomp import analysis as an
from quadcomp import fpp
from quadcomp.dual import DualWindow
from quadcomp.models import (
    CellState,
    ModelKind,
    coupled_run,
    default_box_side,
    init_default,
    richardson_occupation,
)
from quadcomp.percolation import EventWindow

ALL_KINDS = (ModelKind.RICHARDSON, ModelKind.COMPETITION,
             ModelKind.HOSTILE_GROWTH, ModelKind.HOSTILE_COMPETITION)

SUITES = ("coupling", "dual", "shape", "halfcolor", "lemma1", "sectors", "all")


def _check(name: str, kind: str, passed: bool | None, value=None, **details):
    entry = {"name": name, "kind": kind, "value": value}
    if passed is not None:
        entry["pass"] = bool(passed)
    entry.update(details)
    return entry


def _seedline(seed: int, i: int) -> int:
    return seed + i


# --------------------------------------------------------------------------

def coupling_suite(seed: int = 2026, replicates: int = 20, t: float = 100.0,
                   n_checkpoints: int = 4) -> dict:
    """Exact coupling identities at every checkpoint of coupled runs."""
    checkpoints = [t * (k + 1) / n_checkpoints for k in range(n_checkpoints)]
    violations = {k: 0 for k in ("Z=R|B", "R&B empty", "Q in Z",
                                 "R1 in R", "B1 in B", "Q=R1|B1",
                                 "monotone Z")}
    for i in range(replicates):
        series = coupled_run(_seedline(seed, i), ALL_KINDS, t,
                             checkpoint_times=checkpoints)
        prev_z: set | None = None
        for _, states in series.checkpoints:
            z = states[ModelKind.RICHARDSON].site_set()
            r = states[ModelKind.COMPETITION].site_set({CellState.RED})
            b = states[ModelKind.COMPETITION].site_set({CellState.BLUE})
            q = states[ModelKind.HOSTILE_GROWTH].site_set()
            r1 = states[ModelKind.HOSTILE_COMPETITION].site_set({CellState.RED})
            b1 = states[ModelKind.HOSTILE_COMPETITION].site_set({CellState.BLUE})
            violations["Z=R|B"] += z != (r | b)
            violations["R&B empty"] += bool(r & b)
            violations["Q in Z"] += not q <= z
            violations["R1 in R"] += not r1 <= r
            violations["B1 in B"] += not b1 <= b
            violations["Q=R1|B1"] += q != (r1 | b1)
            if prev_z is not None:
                violations["monotone Z"] += not prev_z <= z
            prev_z = z
    checks = [_check(name, "exact", n == 0, value=n)
              for name, n in violations.items()]
    return _suite_report("coupling", checks,
                         config={"seed": seed, "replicates": replicates,
                                 "t": t, "checkpoints": checkpoints})


def dual_suite(seed: int = 2026, seeds: int = 10, samples: int = 10_000,
               t_max: float = 20.0, box_side: int = 64) -> dict:
    """Exact forward/backward agreement on uniformly sampled (site, time)."""
    per_seed = samples // seeds
    rng_local = np.random.default_rng(seed)
    mismatches = {"voter-growth": 0, "voter-competition": 0, "competition": 0}
    checked = 0
    for i in range(seeds):
        s = _seedline(seed, i)
        times = np.sort(rng_local.uniform(0.0, t_max, per_seed))
        xs = rng_local.integers(0, box_side + 1, per_seed)
        ys = rng_local.integers(0, box_side + 1, per_seed)
        cps = sorted(set(float(v) for v in times))
        series = coupled_run(s, (ModelKind.COMPETITION, ModelKind.HOSTILE_GROWTH,
                                 ModelKind.HOSTILE_COMPETITION), t_max,
                             checkpoint_times=cps, box_side=box_side)
        by_time = dict(series.checkpoints)
        dw = DualWindow(EventWindow(box_side, t_max, s))
        hg0 = init_default(ModelKind.HOSTILE_GROWTH, box_side)
        hc0 = init_default(ModelKind.HOSTILE_COMPETITION, box_side)
        for tq, x, y in zip(times, xs, ys):
            if (x, y) == (0, 0):
                continue
            tq = float(tq)
            site = (int(x), int(y))
            checked += 1
            fwd = by_time[tq]
            if dw.voter_color(site, tq, hg0) != \
                    fwd[ModelKind.HOSTILE_GROWTH].state_at(site):
                mismatches["voter-growth"] += 1
            if dw.voter_color(site, tq, hc0) != \
                    fwd[ModelKind.HOSTILE_COMPETITION].state_at(site):
                mismatches["voter-competition"] += 1
            if dw.competition_color(site, tq) != \
                    fwd[ModelKind.COMPETITION].state_at(site):
                mismatches["competition"] += 1
    checks = [_check(f"agreement:{name}", "exact", n == 0, value=n,
                     samples=checked)
              for name, n in mismatches.items()]
    return _suite_report("dual", checks,
                         config={"seed": seed, "seeds": seeds,
                                 "samples": checked, "t_max": t_max,
                                 "box_side": box_side})


def shape_suite(seed: int = 2026, replicates: int = 20, t: float = 150.0,
                tolerance: float = 0.1) -> dict:
    """Hostile-growth profile against the unit square; growth profile above it."""
    hostile = [coupled_run(_seedline(seed, i), (ModelKind.HOSTILE_GROWTH,
                                                ModelKind.RICHARDSON), t,
                           checkpoint_times=[t]) for i in range(replicates)]
    sh = an.shape_from_snapshots(hostile, ModelKind.HOSTILE_GROWTH)
    sr = an.shape_from_snapshots(hostile, ModelKind.RICHARDSON)
    ref = an.square_profile(sh.angles)
    dev = np.nanmax(np.abs(sh.radii - ref))
    growth_above = np.nanmin(sr.radii - ref)
    contained = np.nanmax(sh.radii - sr.radii)
    checks = [
        _check("hostile profile within tolerance of unit square",
               "statistical", bool(dev <= tolerance), value=float(dev),
               tolerance=tolerance),
        _check("growth profile >= square profile", "statistical",
               bool(growth_above >= -tolerance / 2), value=float(growth_above)),
        _check("hostile profile <= growth profile (coupling, angle-wise)",
               "exact", bool(contained <= 1e-12), value=float(contained)),
        _check("axis radius near 1", "statistical",
               bool(abs(sh.radii[0] - 1.0) <= 0.05
                    and abs(sh.radii[-1] - 1.0) <= 0.05),
               value=[float(sh.radii[0]), float(sh.radii[-1])]),
    ]
    return _suite_report("shape", checks,
                         config={"seed": seed, "replicates": replicates,
                                 "t": t, "tolerance": tolerance},
                         shapes={"hostile": _shape_dict(sh),
                                 "growth": _shape_dict(sr)})


def halfcolor_suite(seed: int = 2026, replicates: int = 20, t: float = 150.0,
                    delta: float = 0.1) -> dict:
    """Deterministic half coloring: band containment frequencies at scale t."""
    inner = an.Scaled(an.UnitSquare(), 1 - delta)
    band_red = an.Intersection(inner, an.DiagonalBand("k1", delta))
    band_blue = an.Intersection(inner, an.DiagonalBand("k2", delta))
    kinds = (ModelKind.COMPETITION, ModelKind.HOSTILE_GROWTH,
             ModelKind.HOSTILE_COMPETITION)
    full_pass = 0
    rate_ok = 0
    growth_pass = 0
    outside_ok = 0
    outside_fracs = []
    worst_rate = 0.0
    for i in range(replicates):
        series = coupled_run(_seedline(seed, i), kinds, t, checkpoint_times=[t])
        states = series.checkpoints[0][1]
        hg = states[ModelKind.HOSTILE_GROWTH]
        reports = [
            an.check_containment(states[ModelKind.HOSTILE_COMPETITION],
                                 CellState.RED, band_red, t, delta),
            an.check_containment(states[ModelKind.HOSTILE_COMPETITION],
                                 CellState.BLUE, band_blue, t, delta),
            an.check_containment(states[ModelKind.COMPETITION],
                                 CellState.RED, band_red, t, delta),
            an.check_containment(states[ModelKind.COMPETITION],
                                 CellState.BLUE, band_blue, t, delta),
        ]
        full_pass += all(r.passed for r in reports)
        rates = [r.violation_rate for r in reports]
        worst_rate = max(worst_rate, *rates)
        rate_ok += all(r <= 0.01 for r in rates)
        growth_pass += an.check_containment(hg, CellState.BLACK, inner, t,
                                            delta).passed
        sites = hg.colored_sites()
        frac = float(np.mean((sites[:, 0] > (1 + delta) * t)
                             | (sites[:, 1] > (1 + delta) * t)))
        outside_fracs.append(frac)
        outside_ok += frac <= 0.01
    n = replicates
    checks = [
        _check("growth containment pass fraction", "statistical", None,
               value=growth_pass / n),
        _check("black outside (1+delta) fraction <= 1% (per run)",
               "statistical", None, value=outside_ok / n,
               per_run=outside_fracs),
        _check("band coloring fully passing fraction", "statistical", None,
               value=full_pass / n),
        _check("band coloring violation rate <= 1% fraction", "statistical",
               None, value=rate_ok / n, worst_rate=worst_rate),
    ]
    return _suite_report("halfcolor", checks,
                         config={"seed": seed, "replicates": replicates,
                                 "t": t, "delta": delta})


def lemma1_suite(seed: int = 2026, walk_trials: int = 100_000,
                 mu_n: int = 500, mu_replicates: int = 50) -> dict:
    """Two-step block statistics and growth-rate bounds at the diagonal."""
    walk = fpp.diagonal_walk(seed, walk_trials)
    freqs = walk.displacement_frequencies()
    t1 = walk.step_times
    t1_mean = float(t1.mean())
    t1_se = float(t1.std(ddof=1) / math.sqrt(len(t1)))
    ci99 = 2.5758293035489004  # standard normal 99.5% quantile
    greedy = fpp.greedy_two_step(_seedline(seed, 1), walk_trials)
    mu_diag = fpp.mu_estimate((1.0, 1.0), mu_n, mu_replicates,
                              seed=_seedline(seed, 2))
    mu_axis = fpp.mu_estimate((1.0, 0.0), 1000, mu_replicates,
                              seed=_seedline(seed, 3))
    se = {d: math.sqrt(p * (1 - p) / walk_trials)
          for d, p in (((2, 0), 0.25), ((1, 1), 0.5), ((0, 2), 0.25))}
    checks = [
        _check("step displacement frequencies near (1/4, 1/2, 1/4)",
               "statistical",
               all(abs(freqs[d] - p) <= 3 * se[d]
                   for d, p in (((2, 0), 0.25), ((1, 1), 0.5),
                                ((0, 2), 0.25))),
               value={str(k): v for k, v in freqs.items()}),
        _check("greedy two-step mean within 3 SE of 1", "statistical",
               abs(greedy.mean - 1.0) <= 3 * greedy.stderr,
               value=greedy.mean, stderr=greedy.stderr),
        _check("block time 99% CI below 1", "statistical",
               t1_mean + ci99 * t1_se < 1.0, value=t1_mean,
               ci_high=t1_mean + ci99 * t1_se),
        _check("block time mean within 3 SE of 11/12", "statistical",
               abs(t1_mean - 11 / 12) <= 3 * t1_se, value=t1_mean),
        _check("diagonal growth rate 99% CI below 1", "statistical",
               mu_diag.ci_high < 1.0, value=mu_diag.mean,
               ci=[mu_diag.ci_low, mu_diag.ci_high]),
        _check("axis growth rate within 0.05 of 1", "statistical",
               abs(mu_axis.mean - 1.0) <= 0.05, value=mu_axis.mean,
               ci=[mu_axis.ci_low, mu_axis.ci_high]),
        _check("walk diagonal visit count", "statistical", None,
               value=walk.diagonal_visits()),
    ]
    return _suite_report("lemma1", checks,
                         config={"seed": seed, "walk_trials": walk_trials,
                                 "mu_n": mu_n, "mu_replicates": mu_replicates})


def _sector_replicate(args: tuple) -> tuple[int, int]:
    seed, t_from, t_to, min_measure = args
    series = coupled_run(seed, (ModelKind.COMPETITION,), t_to,
                         checkpoint_times=[t_from, t_to])
    report = an.sector_stability(series, t_from, t_to,
                                 min_measure=min_measure)
    return len(report.matches), report.survivors


def sectors_suite(seed: int = 2026, replicates: int = 50, t_from: float = 200.0,
                  t_to: float = 400.0, min_measure: float = 0.2,
                  jobs: int = 1) -> dict:
    """Frequency of monochromatic outer arcs surviving between checkpoints.

    Replicates are independent and may be dispatched to a worker pool;
    results are assembled in seed order either way.
    """
    tasks = [(_seedline(seed, i), t_from, t_to, min_measure)
             for i in range(replicates)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sector_replicate, tasks))
    else:
        results = [_sector_replicate(task) for task in tasks]
    arc_counts = [r[0] for r in results]
    per_run = [r[1] for r in results]
    surviving = sum(1 for n in per_run if n > 0)
    frac = surviving / replicates
    checks = [
        _check("runs with a surviving arc (fraction)", "statistical", None,
               value=frac, survivors_per_run=per_run,
               arcs_per_run=arc_counts),
        _check("surviving-arc frequency strictly positive", "statistical",
               frac > 0.0, value=frac),
    ]
    return _suite_report("sectors", checks,
                         config={"seed": seed, "replicates": replicates,
                                 "t_from": t_from, "t_to": t_to,
                                 "min_measure": min_measure})


def run_suite(name: str, **kwargs) -> dict:
    if name == "coupling":
        return coupling_suite(**kwargs)
    if name == "dual":
        return dual_suite(**kwargs)
    if name == "shape":
        return shape_suite(**kwargs)
    if name == "halfcolor":
        return halfcolor_suite(**kwargs)
    if name == "lemma1":
        return lemma1_suite(**kwargs)
    if name == "sectors":
        return sectors_suite(**kwargs)
    raise ValueError(f"unknown suite {name!r}")


def _shape_dict(shape: an.ShapeEstimate) -> dict:
    return {
        "angles": [float(a) for a in shape.angles],
        "radii": [float(r) for r in shape.radii],
        "stddev": [float(s) for s in shape.stddev],
        "replicates": shape.replicates,
    }


def _suite_report(name: str, checks: list[dict], config: dict,
                  **extra) -> dict:
    hard_failures = sum(1 for c in checks
                        if c["kind"] == "exact" and c.get("pass") is False)
    verdict = "fail" if hard_failures else "pass"
    report = {"suite": name, "config": config, "checks": checks,
              "hard_failures": hard_failures, "verdict": verdict}
    report.update(extra)
    return report
