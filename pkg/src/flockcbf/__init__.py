"""Distributed collision-free source seeking and flocking of unicycle agents.

A deterministic simulation engine in which one leader climbs an unknown
concave signal field while followers hold a desired gradient difference to
their neighbors' average, and every agent's nominal law is minimally
modified by a per-agent quadratic program enforcing barrier-function safety
(obstacles) and communication-graph connectivity.
"""

from .control import ControlGains, NeighborReport
from .dynamics import AgentState, ExtendedInput, ExtendedState, KinematicInput
from .engine import (
    AgentInit,
    InputLimits,
    MetricsReport,
    ScenarioConfig,
    ScenarioValidationError,
    SimulationLog,
    compute_metrics,
    simulate,
    validate,
)
from .environment import Obstacle, ScalarField, closest_obstacle
from .safety import LinearConstraint, SafetyParams
from .topology import Graph, LeaderAssignment, select_leader

__version__ = "0.1.0"

__all__ = [
    "AgentInit", "AgentState", "ControlGains", "ExtendedInput", "ExtendedState",
    "Graph", "InputLimits", "KinematicInput", "LeaderAssignment",
    "LinearConstraint", "MetricsReport", "NeighborReport", "Obstacle",
    "SafetyParams", "ScalarField", "ScenarioConfig", "ScenarioValidationError",
    "SimulationLog", "closest_obstacle", "compute_metrics", "select_leader",
    "simulate", "validate",
]
