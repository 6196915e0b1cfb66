"""Command-line front end.

Subcommands: `simulate` (runs and snapshots), `verify` (verification
suites), `shape` (radial profiles and the curvature diagnostic), `walk`
(two-step block statistics), `render` (snapshot CSV to raster).  All
outputs are pure functions of the flags; reruns are byte-identical.
Exit codes: 0 on success, 2 when an exact verification check fails,
3 on configuration errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from quadcomp import analysis as an
from quadcomp import fpp, verify
from quadcomp.models import (
    CellState,
    ModelKind,
    coupled_run,
    default_box_side,
    manifest_dict,
    snapshot_from_csv,
    snapshot_to_csv,
)
from quadcomp.reportio import write_json

EXIT_OK = 0
EXIT_HARD_FAIL = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # configuration errors exit with code 3
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Validated free parameters shared by the subcommands."""

    seed: int
    t: float = 50.0
    alpha: float = 0.75
    delta: float = 0.1
    eps: float = 0.15
    rho: float = 0.2
    replicates: int = 20
    jobs: int = 1
    out: Path = field(default_factory=lambda: Path("."))

    def validate(self) -> None:
        if not (0.5 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (1/2, 1)")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if not (0.0 < self.eps < math.pi / 4):
            raise ValueError("eps must lie in (0, pi/4)")
        if self.rho <= 0:
            raise ValueError("rho must be > 0")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, required=True,
                   help="master seed (required; no wall-clock default)")
    p.add_argument("--out", type=Path, default=Path("."),
                   help="output directory (default: current)")


def _config_from(args) -> RunConfig:
    cfg = RunConfig(seed=args.seed, out=args.out)
    for name in ("t", "alpha", "delta", "eps", "rho", "replicates", "jobs"):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    cfg.validate()
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg


# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _config_from(args)
    kinds = tuple(ModelKind(m) for m in args.model)
    checkpoints = ([float(c) for c in args.checkpoints.split(",")]
                   if args.checkpoints else [cfg.t])
    series = coupled_run(cfg.seed, kinds, cfg.t, checkpoint_times=checkpoints,
                         box_side=args.box)
    manifest = manifest_dict(series)
    manifest["command"] = "simulate"
    manifest["snapshots"] = []
    for (t, states) in series.checkpoints:
        entry = {"time": t, "files": {}}
        for kind in kinds:
            name = f"snapshot_{kind.value}_t{t:g}.csv"
            with open(cfg.out / name, "w") as fh:
                snapshot_to_csv(states[kind], fh)
            entry["files"][kind.value] = name
            if args.render:
                pname = f"snapshot_{kind.value}_t{t:g}.ppm"
                with open(cfg.out / pname, "wb") as fh:
                    an.render_ppm(states[kind], fh)
            if args.figure:
                from quadcomp import figures

                figures.snapshot_figure(states[kind],
                                        str(cfg.out / f"snapshot_{kind.value}_t{t:g}.png"))
        manifest["snapshots"].append(entry)
    write_json(manifest, cfg.out / "manifest.json")
    if series.truncated:
        print("warning: occupied set touched the box boundary "
              "(truncation flagged in manifest)", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config_from(args)
    names = (verify.SUITES[:-1] if args.suite == "all" else (args.suite,))
    reports = []
    for name in names:
        kwargs: dict = {"seed": cfg.seed}
        if name == "coupling":
            kwargs.update(replicates=cfg.replicates, t=cfg.t)
        elif name == "dual":
            kwargs.update(samples=args.samples, t_max=min(cfg.t, 20.0))
        elif name == "shape":
            kwargs.update(replicates=cfg.replicates, t=cfg.t)
        elif name == "halfcolor":
            kwargs.update(replicates=cfg.replicates, t=cfg.t, delta=cfg.delta)
        elif name == "lemma1":
            kwargs.update(mu_n=args.n, walk_trials=args.trials)
        elif name == "sectors":
            kwargs.update(replicates=cfg.replicates, min_measure=cfg.rho,
                          jobs=cfg.jobs)
        reports.append(verify.run_suite(name, **kwargs))
    hard = sum(r["hard_failures"] for r in reports)
    verdict = {"command": "verify", "suites": reports,
               "hard_failures": hard,
               "verdict": "fail" if hard else "pass"}
    write_json(verdict, cfg.out / "verify.json")
    for r in reports:
        for c in r["checks"]:
            flag = {True: "pass", False: "FAIL", None: "info"}[c.get("pass")]
            print(f"[{r['suite']}] {c['name']}: {flag} (value={c['value']})")
    print(f"verdict: {verdict['verdict']}")
    return EXIT_HARD_FAIL if hard else EXIT_OK


def cmd_shape(args) -> int:
    cfg = _config_from(args)
    kind = ModelKind(args.model)
    series = [coupled_run(cfg.seed + i, (kind,), cfg.t, checkpoint_times=[cfg.t])
              for i in range(cfg.replicates)]
    shape = an.shape_from_snapshots(series, kind, n_angles=args.angles)
    with open(cfg.out / "radial_profile.csv", "w") as fh:
        shape.to_csv(fh)
    try:
        curv = an.curvature_diagnostic(shape, cfg.eps)
        write_json(curv.as_dict(), cfg.out / "curvature.json")
    except ValueError as exc:
        write_json({"error": str(exc)}, cfg.out / "curvature.json")
    from quadcomp import figures

    figures.profile_figure(shape, str(cfg.out / "radial_profile.png"))
    dev = np.nanmax(np.abs(shape.radii - an.square_profile(shape.angles)))
    print(f"profile written ({cfg.replicates} replicates); "
          f"max deviation from the unit-square profile: {dev:.4f}")
    return EXIT_OK


def cmd_walk(args) -> int:
    cfg = _config_from(args)
    stats = fpp.diagonal_walk(cfg.seed, args.k)
    with open(cfg.out / "walk.csv", "w") as fh:
        stats.to_csv(fh)
    freqs = stats.displacement_frequencies()
    summary = {
        "command": "walk",
        "seed": cfg.seed,
        "steps": stats.k_max,
        "displacement_frequencies": {f"{k[0]},{k[1]}": v
                                     for k, v in freqs.items()},
        "mean_step_time": float(stats.step_times.mean()),
        "final_mean": float(stats.partial_sums[-1] / stats.k_max),
        "diagonal_visits": stats.diagonal_visits(),
    }
    write_json(summary, cfg.out / "walk.json")
    from quadcomp import figures

    figures.walk_figure(stats, str(cfg.out / "walk.png"))
    print(f"walk of {stats.k_max} steps: mean block time "
          f"{summary['mean_step_time']:.5f}, frequencies "
          f"{summary['displacement_frequencies']}")
    return EXIT_OK


def cmd_render(args) -> int:
    cfg = _config_from(args)
    kind = ModelKind(args.model)
    path = Path(args.snapshot)
    if not path.exists():
        print(f"error: snapshot file {path} not found", file=sys.stderr)
        return EXIT_CONFIG
    with open(path) as fh:
        snap = snapshot_from_csv(fh, kind, time=cfg.t,
                                 box_side=args.box if args.box else
                                 default_box_side(cfg.t))
    out_ppm = cfg.out / (path.stem + ".ppm")
    with open(out_ppm, "wb") as fh:
        an.render_ppm(snap, fh)
    from quadcomp import figures

    figures.snapshot_figure(snap, str(cfg.out / (path.stem + ".png")))
    print(f"rendered {out_ppm}")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quadcomp",
                     description="oriented growth and competition on the "
                                 "first-quadrant lattice")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[], help="run models and write "
                       "snapshots")
    _add_common(p)
    p.add_argument("--model", action="append", required=True,
                   choices=[k.value for k in ModelKind],
                   help="model to run (repeat for a coupled run)")
    p.add_argument("--t", type=float, required=True, help="time horizon")
    p.add_argument("--checkpoints", type=str, default=None,
                   help="comma-separated checkpoint times (default: t)")
    p.add_argument("--box", type=int, default=None, help="box side override")
    p.add_argument("--render", action="store_true", help="write PPM rasters")
    p.add_argument("--figure", action="store_true", help="write PNG figures")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run verification suites")
    _add_common(p)
    p.add_argument("suite", choices=list(verify.SUITES))
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--samples", type=int, default=2000,
                   help="dual suite: number of sampled (site, time) queries")
    p.add_argument("--n", type=int, default=500,
                   help="lemma1 suite: diagonal target scale")
    p.add_argument("--trials", type=int, default=100_000,
                   help="lemma1 suite: walk steps / greedy trials")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("shape", help="radial profile and curvature report")
    _add_common(p)
    p.add_argument("--model", required=True,
                   choices=[k.value for k in ModelKind])
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--angles", type=int, default=256)
    p.add_argument("--eps", type=float, default=None)
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("walk", help="two-step block walk statistics")
    _add_common(p)
    p.add_argument("--k", type=int, default=100_000, help="walk steps")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("render", help="render a snapshot CSV")
    _add_common(p)
    p.add_argument("snapshot", type=str, help="snapshot CSV path")
    p.add_argument("--model", required=True,
                   choices=[k.value for k in ModelKind])
    p.add_argument("--t", type=float, required=True,
                   help="snapshot time (for scaling)")
    p.add_argument("--box", type=int, default=None)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
