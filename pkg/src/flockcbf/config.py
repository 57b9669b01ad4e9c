"""Scenario file loading.

Scenarios are TOML files with the sections [field], [[obstacles]],
[[agents]], [gains], [safety], [limits], [graph] and [sim]. Headings are
given in degrees in the file and converted to radians internally. Unknown
keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import math
from dataclasses import fields as dc_fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .control import ControlGains
from .engine import AgentInit, InputLimits, ScenarioConfig
from .environment import Obstacle, ScalarField
from .safety import SafetyParams


class ConfigError(ValueError):
    """Unreadable or malformed scenario file."""


_TOP_KEYS = {"field", "obstacles", "agents", "gains", "safety", "limits",
             "graph", "sim"}
_FIELD_KEYS = {"hessian", "center"}
_OBSTACLE_KEYS = {"center", "radius"}
_AGENT_KEYS = {"position", "heading_deg", "speed"}
_GRAPH_KEYS = {"mode", "edges"}
_SIM_KEYS = {"dt", "t_end", "pipeline", "controller", "relax_weight",
             "obstacle_rows", "detection_radius"}


def _check_keys(table: dict, allowed: set[str], where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _pair(value, where: str) -> tuple[float, float]:
    try:
        a, b = value
        return float(a), float(b)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where} must be a pair of numbers") from exc


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and assemble a ScenarioConfig; raises ConfigError with the
    offending location on malformed input."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        # TOMLDecodeError messages already carry "at line N, column M"
        raise ConfigError(f"{path}: {exc}") from exc
    return build_config(doc)


def build_config(doc: dict) -> ScenarioConfig:
    _check_keys(doc, _TOP_KEYS, "top level")

    fld_tab = doc.get("field", {})
    _check_keys(fld_tab, _FIELD_KEYS, "[field]")
    try:
        field = ScalarField(
            hessian_matrix=tuple(tuple(float(v) for v in row)
                                 for row in fld_tab.get("hessian",
                                                        [[1.0, 0.0], [0.0, 1.0]])),
            center=_pair(fld_tab.get("center", [0.0, 0.0]), "field.center"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[field]: {exc}") from exc

    obstacles = []
    for k, tab in enumerate(doc.get("obstacles", [])):
        _check_keys(tab, _OBSTACLE_KEYS, f"[[obstacles]] #{k}")
        try:
            obstacles.append(Obstacle(_pair(tab["center"], "obstacle center"),
                                      float(tab["radius"])))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"[[obstacles]] #{k}: {exc}") from exc

    agents = []
    for k, tab in enumerate(doc.get("agents", [])):
        _check_keys(tab, _AGENT_KEYS, f"[[agents]] #{k}")
        try:
            x, y = _pair(tab["position"], "agent position")
            agents.append(AgentInit(
                x, y, math.radians(float(tab["heading_deg"])),
                float(tab.get("speed", 0.1))))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"[[agents]] #{k}: {exc}") from exc

    gains = _build_dataclass(ControlGains, doc.get("gains", {}), "[gains]")
    safety = _build_dataclass(SafetyParams, doc.get("safety", {}), "[safety]")
    limits = _build_dataclass(InputLimits, doc.get("limits", {}), "[limits]")

    graph_tab = doc.get("graph", {})
    _check_keys(graph_tab, _GRAPH_KEYS, "[graph]")
    mode = graph_tab.get("mode", "proximity")
    edges = graph_tab.get("edges")
    static_edges = None
    if edges is not None:
        try:
            static_edges = tuple((int(i), int(j)) for i, j in edges)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[graph] edges: {exc}") from exc

    sim_tab = doc.get("sim", {})
    _check_keys(sim_tab, _SIM_KEYS, "[sim]")

    try:
        return ScenarioConfig(
            field=field,
            obstacles=tuple(obstacles),
            agents=tuple(agents),
            gains=gains,
            safety=safety,
            limits=limits,
            graph_mode=mode,
            static_edges=static_edges,
            controller=sim_tab.get("controller", "unconstrained"),
            pipeline=sim_tab.get("pipeline", "qp"),
            dt=float(sim_tab.get("dt", 0.01)),
            t_end=float(sim_tab.get("t_end", 30.0)),
            relax_weight=float(sim_tab.get("relax_weight", 1.0)),
            obstacle_rows=sim_tab.get("obstacle_rows", "closest"),
            detection_radius=float(sim_tab.get("detection_radius", math.inf)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build_dataclass(cls, table: dict, where: str):
    allowed = {f.name for f in dc_fields(cls)}
    _check_keys(table, allowed, where)
    try:
        return cls(**{k: float(v) for k, v in table.items()})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
