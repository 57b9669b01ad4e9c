"""CSV serialization of simulation logs and the metrics text format.

Numbers are written with 17 significant digits so parsing them back gives
bit-identical float64 values; files are written to a temp path and renamed
so partial output never appears under the final name.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

from .engine import MetricsReport, SimulationLog

TRAJECTORY_HEADER = ("t,agent_id,x,y,theta,v,a_applied,omega_applied,"
                     "v_nominal,omega_nominal,e_flock,h_obstacle")
EDGES_HEADER = "t,i,j,mu_ij,h_ij,gamma_ij"


def _fmt(x: float) -> str:
    return format(x, ".17g")


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def trajectory_csv(log: SimulationLog) -> str:
    lines = [TRAJECTORY_HEADER]
    for step in log.steps:
        for i, a in enumerate(step.agents):
            lines.append(",".join((
                _fmt(step.t), str(i), _fmt(a.x), _fmt(a.y), _fmt(a.theta),
                _fmt(a.v), _fmt(a.a_applied), _fmt(a.omega_applied),
                _fmt(a.v_nominal), _fmt(a.omega_nominal), _fmt(a.e_flock),
                _fmt(a.h_obstacle))))
    return "\n".join(lines) + "\n"


def edges_csv(log: SimulationLog) -> str:
    """One row per directed edge: (i, j) carries agent i's relaxation weight."""
    lines = [EDGES_HEADER]
    for step in log.steps:
        for e in step.edges:
            lines.append(",".join((_fmt(step.t), str(e.i), str(e.j),
                                   _fmt(e.mu), _fmt(e.h), _fmt(e.gamma_ij))))
            lines.append(",".join((_fmt(step.t), str(e.j), str(e.i),
                                   _fmt(e.mu), _fmt(e.h), _fmt(e.gamma_ji))))
    return "\n".join(lines) + "\n"


def parse_trajectory_csv(text: str) -> list[dict]:
    """Rows as dicts of floats (agent_id as int); raises on malformed rows."""
    lines = text.strip().split("\n")
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise ValueError("unrecognized trajectory CSV header")
    names = TRAJECTORY_HEADER.split(",")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(names):
            raise ValueError(f"line {ln}: expected {len(names)} fields, got {len(parts)}")
        try:
            row = {name: float(v) for name, v in zip(names, parts)}
        except ValueError as exc:
            raise ValueError(f"line {ln}: {exc}") from exc
        row["agent_id"] = int(row["agent_id"])
        rows.append(row)
    return rows


def parse_edges_csv(text: str) -> list[dict]:
    lines = text.strip().split("\n")
    if not lines or lines[0] != EDGES_HEADER:
        raise ValueError("unrecognized edges CSV header")
    names = EDGES_HEADER.split(",")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(names):
            raise ValueError(f"line {ln}: expected {len(names)} fields, got {len(parts)}")
        try:
            row = {name: float(v) for name, v in zip(names, parts)}
        except ValueError as exc:
            raise ValueError(f"line {ln}: {exc}") from exc
        row["i"] = int(row["i"])
        row["j"] = int(row["j"])
        rows.append(row)
    return rows


def metrics_text(metrics: MetricsReport, leader: int) -> str:
    lines = [
        f"leader_index = {leader}",
        f"leader_final_distance = {_fmt(metrics.leader_final_distance)}",
        f"max_final_flock_error = {_fmt(metrics.max_final_flock_error)}",
        f"min_obstacle_clearance = {_fmt(metrics.min_obstacle_clearance)}",
        f"mu_min = {_fmt(metrics.mu_min)}",
        f"mu_max = {_fmt(metrics.mu_max)}",
        f"fraction_connected = {_fmt(metrics.fraction_connected)}",
        f"qp_fallbacks = {metrics.qp_fallbacks}",
    ]
    return "\n".join(lines) + "\n"


def group_by_agent(rows: list[dict]) -> dict[int, list[dict]]:
    series: dict[int, list[dict]] = {}
    for row in rows:
        series.setdefault(row["agent_id"], []).append(row)
    return series


def infer_leader(rows: list[dict]) -> int | None:
    """The leader is the agent whose flocking error column is all NaN."""
    series = group_by_agent(rows)
    leaders = [i for i, rs in series.items()
               if all(math.isnan(r["e_flock"]) for r in rs)]
    if len(leaders) == 1:
        return leaders[0]
    if len(series) == 1:
        return next(iter(series))
    return None
