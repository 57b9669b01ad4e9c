"""Command-line surface: validate scenarios, run simulations, export metrics
and render trajectory plots.

Exit codes are the only success/failure channel: 0 clean, 1 error, and for
``run`` 2 when the simulation completed but some QP fell back (the run is
not safety-certified). Metrics summaries go to stdout, diagnostics to
stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from . import engine, logio, plot
from .config import ConfigError, load_config


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(f"parse error: {exc}")
        return 1
    violations = engine.validate(cfg)
    for v in violations:
        _err(v)
    return 1 if violations else 0


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(f"parse error: {exc}")
        return 1
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.controller is not None:
        overrides["controller"] = args.controller
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)

    violations = engine.validate(cfg)
    if violations:
        for v in violations:
            _err(v)
        return 1

    log = engine.simulate(cfg)
    metrics = engine.compute_metrics(log)

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        logio.atomic_write_text(out_dir / "trajectory.csv", logio.trajectory_csv(log))
        logio.atomic_write_text(out_dir / "edges.csv", logio.edges_csv(log))
        summary = logio.metrics_text(metrics, log.leader)
        logio.atomic_write_text(out_dir / "metrics.txt", summary)
        if args.plot:
            series = {i: [(s.agents[i].x, s.agents[i].y) for s in log.steps]
                      for i in range(len(cfg.agents))}
            svg = plot.render_svg(series, list(cfg.obstacles), log.leader,
                                  cfg.field.center)
            logio.atomic_write_text(out_dir / "trajectory.svg", svg)
    except OSError as exc:
        _err(f"cannot write outputs: {exc}")
        return 1
    sys.stdout.write(summary)
    return 2 if log.fallback_total > 0 else 0


def cmd_plot(args) -> int:
    try:
        rows = logio.parse_trajectory_csv(Path(args.csv).read_text(encoding="utf-8"))
        series = plot.series_from_rows(rows)
    except (OSError, ValueError) as exc:
        _err(f"bad trajectory CSV: {exc}")
        return 1
    obstacles = []
    source = None
    if args.config is not None:
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            _err(f"parse error: {exc}")
            return 1
        obstacles = list(cfg.obstacles)
        source = cfg.field.center
    leader = logio.infer_leader(rows)
    try:
        logio.atomic_write_text(args.out, plot.render_svg(series, obstacles,
                                                          leader, source))
    except OSError as exc:
        _err(f"cannot write SVG: {exc}")
        return 1
    return 0


def cmd_metrics(args) -> int:
    try:
        rows = logio.parse_trajectory_csv(Path(args.csv).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        _err(f"bad trajectory CSV: {exc}")
        return 1
    edge_rows = None
    if args.edges is not None:
        try:
            edge_rows = logio.parse_edges_csv(Path(args.edges).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            _err(f"bad edges CSV: {exc}")
            return 1
    center = (0.0, 0.0)
    obstacles = []
    if args.config is not None:
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            _err(f"parse error: {exc}")
            return 1
        center = cfg.field.center
        obstacles = list(cfg.obstacles)

    series = logio.group_by_agent(rows)
    leader = logio.infer_leader(rows)
    t_last = max(r["t"] for r in rows)
    lines = []
    if leader is not None:
        last = series[leader][-1]
        dist = math.hypot(last["x"] - center[0], last["y"] - center[1])
        lines.append(f"leader_index = {leader}")
        lines.append(f"leader_final_distance = {dist:.17g}")
    final_err = 0.0
    for i, rs in series.items():
        e = rs[-1]["e_flock"]
        if not math.isnan(e):
            final_err = max(final_err, abs(e))
    lines.append(f"max_final_flock_error = {final_err:.17g}")
    if obstacles:
        clear = min(
            min(obs.boundary_distance((r["x"], r["y"])) for obs in obstacles)
            for r in rows)
        lines.append(f"min_obstacle_clearance = {clear:.17g}")
    if edge_rows:
        mus = [r["mu_ij"] for r in edge_rows]
        lines.append(f"mu_min = {min(mus):.17g}")
        lines.append(f"mu_max = {max(mus):.17g}")
    lines.append(f"t_end = {t_last:.17g}")
    print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flockcbf",
        description="Collision-free source seeking and flocking simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate a scenario and write outputs")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None, dest="t_end")
    p.add_argument("--controller", choices=("unconstrained", "constrained"),
                   default=None)
    p.add_argument("--plot", action="store_true", help="also write trajectory.svg")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render a trajectory CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None,
                   help="scenario file providing obstacles and source position")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("metrics", help="recompute metrics from CSV outputs")
    p.add_argument("csv")
    p.add_argument("--edges", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
