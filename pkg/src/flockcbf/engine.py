"""Scenario orchestration: snapshot, nominal control, constraint assembly,
per-agent QP, synchronous integration and logging.

Two pipelines share the loop:

* ``qp`` -- the full safety filter. Agents carry the 5-state extended
  dynamics; every step each agent turns its nominal law into an
  acceleration/turn-rate reference, assembles its obstacle row, one relaxed
  row per communication neighbor and the input box bounds, and applies the
  QP minimizer. All QPs are solved against the same snapshot and all states
  advance together.
* ``nominal`` -- the bare closed loop used for the convergence checks:
  controller outputs are applied directly through the kinematic model, with
  no bounds and no filter.

Per-agent computation sees only the agent's own state, its own field and
obstacle sensing, and its neighbors' broadcast reports. Neighbor positions
are never shared: the relative offset is reconstructed from the gradient
difference through the field Hessian, which is exact for the quadratic
field family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

from . import control, dynamics, qpsolver, safety, topology
from .control import ControlGains, NeighborReport
from .dynamics import AgentState, ExtendedInput, ExtendedState, KinematicInput
from .environment import Obstacle, ScalarField, closest_obstacle
from .safety import SafetyParams

NAN = float("nan")


class ScenarioValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class AgentInit:
    x: float
    y: float
    theta: float          # radians
    v0: float = 0.1


@dataclass(frozen=True)
class InputLimits:
    v_min: float = 0.01
    v_max: float = 10.0
    omega_min: float = -50.0
    omega_max: float = 50.0
    a_min: float = -math.inf
    a_max: float = math.inf


@dataclass(frozen=True)
class ScenarioConfig:
    field: ScalarField = ScalarField()
    obstacles: tuple[Obstacle, ...] = ()
    agents: tuple[AgentInit, ...] = ()
    gains: ControlGains = ControlGains()
    safety: SafetyParams = SafetyParams()
    limits: InputLimits = InputLimits()
    graph_mode: str = "proximity"            # "proximity" | "static"
    static_edges: tuple[tuple[int, int], ...] | None = None   # None = complete
    controller: str = "unconstrained"        # "unconstrained" | "constrained"
    pipeline: str = "qp"                     # "qp" | "nominal"
    dt: float = 0.01
    t_end: float = 30.0
    relax_weight: float = 1.0                # reference value for every gamma
    obstacle_rows: str = "closest"           # "closest" | "all"
    detection_radius: float = math.inf       # used with obstacle_rows="all"


@dataclass
class AgentRecord:
    x: float
    y: float
    theta: float
    v: float
    a_applied: float
    omega_applied: float
    v_nominal: float
    omega_nominal: float
    e_flock: float
    h_obstacle: float
    clearance: float
    qp_status: str


@dataclass
class EdgeRecord:
    i: int
    j: int
    mu: float
    h: float
    gamma_ij: float
    gamma_ji: float


@dataclass
class StepRecord:
    t: float
    agents: list[AgentRecord]
    edges: list[EdgeRecord]
    connected: bool
    v_s: float
    v_f: float
    fragmented: bool
    fallbacks: int
    set_violations: int


@dataclass
class SimulationLog:
    config: ScenarioConfig
    leader: int
    steps: list[StepRecord] = dc_field(default_factory=list)
    fallback_total: int = 0
    clamp_total: int = 0


@dataclass(frozen=True)
class MetricsReport:
    leader_final_distance: float
    max_final_flock_error: float
    min_obstacle_clearance: float
    mu_min: float
    mu_max: float
    fraction_connected: float
    qp_fallbacks: int


# ---------------------------------------------------------------------------
# validation

def validate(cfg: ScenarioConfig) -> list[str]:
    """All scenario invariants; one message per violation."""
    bad: list[str] = []
    n = len(cfg.agents)
    if n < 1:
        bad.append("at least one agent required")
        return bad
    if cfg.graph_mode not in ("static", "proximity"):
        bad.append(f"unknown graph mode '{cfg.graph_mode}'")
    if cfg.controller not in ("unconstrained", "constrained"):
        bad.append(f"unknown controller '{cfg.controller}'")
    if cfg.pipeline not in ("qp", "nominal"):
        bad.append(f"unknown pipeline '{cfg.pipeline}'")
    if cfg.obstacle_rows not in ("closest", "all"):
        bad.append(f"unknown obstacle row mode '{cfg.obstacle_rows}'")
    if cfg.dt <= 0.0:
        bad.append("dt must be positive")
    if cfg.t_end < 0.0:
        bad.append("t_end must be nonnegative")
    if not cfg.gains.d_star < cfg.safety.r:
        bad.append("d_star must be smaller than the sensing range r")
    if not cfg.limits.v_min > 0.0:
        bad.append("v_min must be positive (extended dynamics divide by v)")
    if not cfg.limits.v_max > cfg.limits.v_min:
        bad.append("v_max must exceed v_min")
    if not cfg.limits.omega_max > cfg.limits.omega_min:
        bad.append("omega_max must exceed omega_min")
    if not cfg.limits.v_max * cfg.safety.d2 < 1.0:
        bad.append("v_max * d2 must stay below 1")

    positions = [(a.x, a.y) for a in cfg.agents]
    for i in range(n):
        for j in range(i + 1, n):
            if positions[i] == positions[j]:
                bad.append(f"coincident positions for agents {i} and {j}")
    if cfg.pipeline == "qp":
        for i, a in enumerate(cfg.agents):
            if a.v0 < cfg.limits.v_min:
                bad.append(f"agent {i} initial speed below v_min")

    graph, err = _initial_graph(cfg)
    if err:
        bad.append(err)
    if graph is not None:
        if not topology.is_connected(graph):
            bad.append("initial graph not connected")
        # proximity edges satisfy mu < r by construction; static edges carry
        # the separation-only barrier, so only the lower range needs checking
        fld = cfg.field
        for i, j in graph.edges():
            mu = safety.gradient_distance(fld, positions[i], positions[j])
            if mu <= cfg.safety.d_r:
                bad.append(f"initial edge ({i},{j}) inside minimum range d_r")

    if cfg.obstacles and cfg.pipeline == "qp":
        for i, p in enumerate(positions):
            _, dist = closest_obstacle(p, list(cfg.obstacles))
            if dist <= cfg.safety.d1:
                bad.append(f"agent {i} starts inside the obstacle safe margin")
    return bad


def _initial_graph(cfg: ScenarioConfig):
    n = len(cfg.agents)
    if cfg.graph_mode == "static":
        if cfg.static_edges is None:
            return topology.Graph.complete(n), None
        try:
            return topology.Graph.from_edges(n, cfg.static_edges), None
        except ValueError as exc:
            return None, f"bad static edge list: {exc}"
    grads = [cfg.field.gradient((a.x, a.y)) for a in cfg.agents]
    return topology.proximity_edges(grads, cfg.safety.r), None


# ---------------------------------------------------------------------------
# per-agent decision (distributed information only)

@dataclass
class _Decision:
    v_nominal: float
    omega_nominal: float
    a_applied: float
    omega_applied: float
    gammas: dict[int, float]
    qp_status: str
    e_flock: float
    fragmented: bool
    fallback: bool


def _nominal_input(is_leader: bool, own: AgentState, fld: ScalarField,
                   neighbor_reports: list[NeighborReport], gains: ControlGains,
                   variant: str, hold_v: float) -> tuple[KinematicInput, float, bool]:
    """Nominal law evaluation from local sensing; returns (input, e_flock, fragmented)."""
    if is_leader:
        grad = fld.gradient((own.x, own.y))
        return control.source_seeking(own.theta, grad, gains), NAN, False
    if not neighbor_reports:
        return KinematicInput(hold_v, 0.0), NAN, True
    n_grads = [rep.grad for rep in neighbor_reports]
    if variant == "unconstrained":
        p_off = dynamics.offset_point(own, gains.d_offset)
        err = control.flocking_error(fld.gradient(p_off), n_grads, gains.d_star)
        u = control.flocking_unconstrained(own, err, fld.hessian(p_off),
                                           neighbor_reports, gains)
        return u, err.e, False
    errv = control.flocking_error_vector(fld.gradient((own.x, own.y)), own.theta,
                                         n_grads, gains.d_star)
    u = control.flocking_constrained(own, errv, fld.hessian((own.x, own.y)),
                                     neighbor_reports, gains)
    return u, math.hypot(*errv.e_vec), False


def _agent_decision(own: ExtendedState, is_leader: bool, fld: ScalarField,
                    neighbor_ids: tuple[int, ...], reports: dict[int, NeighborReport],
                    obstacles: list[Obstacle], cfg: ScenarioConfig) -> _Decision:
    """Nominal law + QP filter for one agent, from distributed information."""
    theta = dynamics.heading_of(own)
    kin = AgentState(own.x, own.y, theta)
    neighbor_reports = [reports[j] for j in neighbor_ids]
    u_nom, e_flock, fragmented = _nominal_input(
        is_leader, kin, fld, neighbor_reports, cfg.gains, cfg.controller, own.v)

    dt = cfg.dt
    a_ref = control.reference_acceleration(u_nom.v, own.v, dt)
    w_ref = u_nom.omega

    n_gamma = len(neighbor_ids)
    z_ref = (a_ref, w_ref) + (cfg.relax_weight,) * n_gamma
    rows: list[tuple[tuple[float, ...], float]] = []

    if obstacles:
        if cfg.obstacle_rows == "closest":
            _, constraint = safety.obstacle_barrier(own, obstacles, cfg.safety)
            rows.append(_expand_row(constraint, None, neighbor_ids))
        else:
            for obs in obstacles:
                if obs.boundary_distance((own.x, own.y)) <= cfg.detection_radius:
                    _, constraint = safety.obstacle_row(own, obs, cfg.safety)
                    rows.append(_expand_row(constraint, None, neighbor_ids))

    range_limited = cfg.graph_mode == "proximity"
    own_hess = fld.hessian((own.x, own.y))
    own_grad = fld.gradient((own.x, own.y))
    for j in neighbor_ids:
        xj = _reconstruct_neighbor(own, own_grad, own_hess, reports[j])
        _, constraint = safety.connectivity_barrier(own, xj, fld, cfg.safety,
                                                    range_limited)
        rows.append(_expand_row(constraint, j, neighbor_ids))

    a_lo = max(cfg.limits.a_min, (cfg.limits.v_min - own.v) / dt)
    a_hi = min(cfg.limits.a_max, (cfg.limits.v_max - own.v) / dt)
    if a_lo > a_hi:
        return _fallback(u_nom, e_flock, fragmented, neighbor_ids, cfg, own, dt)
    boxes = ((0, a_lo, a_hi), (1, cfg.limits.omega_min, cfg.limits.omega_max))

    problem = qpsolver.QpProblem(z_ref, tuple(rows), boxes)
    sol = qpsolver.solve(problem)
    if sol.status != "optimal":
        return _fallback(u_nom, e_flock, fragmented, neighbor_ids, cfg, own, dt)
    gammas = {j: sol.z_star[2 + k] for k, j in enumerate(neighbor_ids)}
    return _Decision(u_nom.v, u_nom.omega, sol.z_star[0], sol.z_star[1],
                     gammas, "optimal", e_flock, fragmented, False)


def _fallback(u_nom, e_flock, fragmented, neighbor_ids, cfg, own, dt) -> _Decision:
    a_fb = (cfg.limits.v_min - own.v) / dt
    a_fb = min(max(a_fb, cfg.limits.a_min), cfg.limits.a_max)
    return _Decision(u_nom.v, u_nom.omega, a_fb, 0.0,
                     {j: NAN for j in neighbor_ids}, "infeasible",
                     e_flock, fragmented, True)


def _expand_row(constraint: safety.LinearConstraint, gamma_for: int | None,
                neighbor_ids: tuple[int, ...]):
    """Lift a 2-input constraint row into the (a, omega, gammas...) space."""
    coeffs = [constraint.coeff_u[0], constraint.coeff_u[1]] + [0.0] * len(neighbor_ids)
    if gamma_for is not None:
        coeffs[2 + neighbor_ids.index(gamma_for)] = constraint.coeff_gamma
    return tuple(coeffs), -constraint.offset


def _reconstruct_neighbor(own: ExtendedState, own_grad, own_hess,
                          rep: NeighborReport) -> ExtendedState:
    """Neighbor extended state from its report plus own local measurements."""
    gdx = rep.grad[0] - own_grad[0]
    gdy = rep.grad[1] - own_grad[1]
    (a, b), (c, d) = own_hess
    det = a * d - b * c
    dx = (d * gdx - b * gdy) / det
    dy = (-c * gdx + a * gdy) / det
    return ExtendedState(own.x + dx, own.y + dy, rep.v,
                         rep.v * math.cos(rep.theta), rep.v * math.sin(rep.theta))


# ---------------------------------------------------------------------------
# simulation loop

def simulate(cfg: ScenarioConfig) -> SimulationLog:
    """Deterministic rollout over the [0, t_end] grid; leader fixed at t = 0."""
    violations = validate(cfg)
    if violations:
        raise ScenarioValidationError(violations)

    n = len(cfg.agents)
    fld = cfg.field
    obstacles = list(cfg.obstacles)
    positions0 = [(a.x, a.y) for a in cfg.agents]
    assignment = topology.select_leader(positions0, fld)
    leader = assignment.leader
    static_graph = None
    if cfg.graph_mode == "static":
        static_graph = (topology.Graph.complete(n) if cfg.static_edges is None
                        else topology.Graph.from_edges(n, cfg.static_edges))

    qp_mode = cfg.pipeline == "qp"
    if qp_mode:
        ext = [dynamics.to_extended(AgentState(a.x, a.y, a.theta), a.v0,
                                    cfg.limits.v_min) for a in cfg.agents]
        kin = None
        v_applied = None
    else:
        kin = [AgentState(a.x, a.y, a.theta) for a in cfg.agents]
        v_applied = [a.v0 for a in cfg.agents]
        ext = None

    log = SimulationLog(cfg, leader)
    n_steps = int(round(cfg.t_end / cfg.dt))
    range_limited = cfg.graph_mode == "proximity"

    for k in range(n_steps + 1):
        t = k * cfg.dt
        if qp_mode:
            positions = [(s.x, s.y) for s in ext]
            headings = [dynamics.heading_of(s) for s in ext]
            speeds = [s.v for s in ext]
        else:
            positions = [(s.x, s.y) for s in kin]
            headings = [s.theta for s in kin]
            speeds = list(v_applied)

        grads = [fld.gradient(p) for p in positions]
        hessians = [fld.hessian(p) for p in positions]
        graph = static_graph if static_graph is not None \
            else topology.proximity_edges(grads, cfg.safety.r)
        connected = topology.is_connected(graph)
        reports = {
            j: NeighborReport(speeds[j], headings[j], grads[j], hessians[j])
            for j in range(n)
        }

        decisions: list[_Decision] = []
        for i in range(n):
            if qp_mode:
                decisions.append(_agent_decision(
                    ext[i], i == leader, fld, graph.neighbors[i], reports,
                    obstacles, cfg))
            else:
                own = kin[i]
                nbr_reports = [reports[j] for j in graph.neighbors[i]]
                u_nom, e_flock, fragmented = _nominal_input(
                    i == leader, own, fld, nbr_reports, cfg.gains,
                    cfg.controller, v_applied[i])
                decisions.append(_Decision(u_nom.v, u_nom.omega, NAN, u_nom.omega,
                                           {}, "nominal", e_flock, fragmented,
                                           False))

        agent_records = []
        for i in range(n):
            dec = decisions[i]
            if obstacles:
                oi, clearance = closest_obstacle(positions[i], obstacles)
                o_unit = (math.cos(headings[i]), math.sin(headings[i]))
                h_obs = safety.obstacle_barrier_value(
                    positions[i], o_unit, speeds[i], obstacles[oi], cfg.safety)
            else:
                clearance = math.inf
                h_obs = NAN
            agent_records.append(AgentRecord(
                positions[i][0], positions[i][1], headings[i], speeds[i],
                dec.a_applied, dec.omega_applied, dec.v_nominal,
                dec.omega_nominal, dec.e_flock, h_obs, clearance,
                dec.qp_status))

        edge_records = []
        set_violations = 0
        for i, j in graph.edges():
            oi = (math.cos(headings[i]), math.sin(headings[i]))
            oj = (math.cos(headings[j]), math.sin(headings[j]))
            mu, h_ij = safety.pair_barrier_value(
                positions[i], oi, positions[j], oj, fld, cfg.safety,
                range_limited)
            if range_limited:
                if not cfg.safety.d_r < mu < cfg.safety.r:
                    set_violations += 1
            elif mu <= cfg.safety.d_r:
                set_violations += 1
            edge_records.append(EdgeRecord(
                i, j, mu, h_ij,
                decisions[i].gammas.get(j, NAN),
                decisions[j].gammas.get(i, NAN)))

        v_s = (fld.eval(fld.center) - fld.eval(positions[leader])
               + 0.5 * math.cos(headings[leader]) ** 2
               + 0.5 * math.sin(headings[leader]) ** 2)
        v_f = _flock_lyapunov(cfg.controller, leader, decisions, headings)
        fallbacks = sum(1 for d in decisions if d.fallback)
        log.fallback_total += fallbacks
        log.steps.append(StepRecord(
            t, agent_records, edge_records, connected, v_s, v_f,
            any(d.fragmented for d in decisions), fallbacks, set_violations))

        if k == n_steps:
            break
        if qp_mode:
            new_ext = []
            for i in range(n):
                dec = decisions[i]
                if ext[i].v + dec.a_applied * cfg.dt < cfg.limits.v_min - 1e-12:
                    log.clamp_total += 1
                new_ext.append(dynamics.step_extended(
                    ext[i], ExtendedInput(dec.a_applied, dec.omega_applied),
                    cfg.dt, cfg.limits.v_min))
            ext = new_ext
        else:
            for i in range(n):
                dec = decisions[i]
                kin[i] = dynamics.step_kinematic(
                    kin[i], KinematicInput(dec.v_nominal, dec.omega_nominal),
                    cfg.dt)
                v_applied[i] = dec.v_nominal
    return log


def _flock_lyapunov(variant: str, leader: int, decisions: list[_Decision],
                    headings: list[float]) -> float:
    total = 0.0
    for i, dec in enumerate(decisions):
        if i == leader or math.isnan(dec.e_flock):
            continue
        total += 0.5 * dec.e_flock ** 2
        if variant == "constrained":
            total += 0.5 * (math.cos(headings[i]) ** 2 + math.sin(headings[i]) ** 2)
    return total


def compute_metrics(log: SimulationLog) -> MetricsReport:
    """Scenario-level metrics derived from the log alone."""
    if not log.steps:
        raise ValueError("empty log")
    last = log.steps[-1]
    center = log.config.field.center
    lp = (last.agents[log.leader].x, last.agents[log.leader].y)
    leader_dist = math.hypot(lp[0] - center[0], lp[1] - center[1])

    final_err = 0.0
    for i, rec in enumerate(last.agents):
        if i != log.leader and not math.isnan(rec.e_flock):
            final_err = max(final_err, abs(rec.e_flock))

    min_clear = math.inf
    mu_min = math.inf
    mu_max = -math.inf
    connected_steps = 0
    for step in log.steps:
        for rec in step.agents:
            if rec.clearance < min_clear:
                min_clear = rec.clearance
        for edge in step.edges:
            mu_min = min(mu_min, edge.mu)
            mu_max = max(mu_max, edge.mu)
        if step.connected:
            connected_steps += 1

    return MetricsReport(
        leader_final_distance=leader_dist,
        max_final_flock_error=final_err,
        min_obstacle_clearance=min_clear,
        mu_min=mu_min if mu_min != math.inf else NAN,
        mu_max=mu_max if mu_max != -math.inf else NAN,
        fraction_connected=connected_steps / len(log.steps),
        qp_fallbacks=log.fallback_total,
    )
