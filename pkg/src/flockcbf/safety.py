"""Zeroing control barrier functions and their constraint rows.

Two barriers are assembled per agent per step:

* an obstacle barrier  h = (dist - d1) * exp(-P)  against the closest disk,
  where P projects the heading onto the agent-to-obstacle direction and adds
  a speed offset v*d2;
* a pair barrier  h_ij = D * (exp(-P_ij) + exp(-P_ji))  per communication
  neighbor, with D = (mu_ij - d_r)(r - mu_ij) in proximity (range-limited)
  mode and D = mu_ij - d_r when the topology is fixed and only separation
  matters. mu_ij is the gradient difference norm, so for the quadratic field
  it equals 2 ||H (p_j - p_i)||.

Lie derivatives along the extended dynamics are computed in closed form
(chain rule through the distance, the projections and mu); the QP needs
smooth, cheap rows. Each pair yields one relaxed row per endpoint, carrying
only that endpoint's input coefficients; summing the two rows bounds the
full hdot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import ExtendedState
from .environment import Obstacle, ScalarField, closest_obstacle

Vec2 = tuple[float, float]


class BarrierDomainError(ValueError):
    """Barrier evaluated where its direction terms are undefined."""


@dataclass(frozen=True)
class SafetyParams:
    d1: float = 0.2       # obstacle safe margin (length)
    d2: float = 0.05      # directional speed offset (time/length), v*d2 in (0,1)
    d_r: float = 0.1      # minimum inter-agent gradient range
    r: float = 10.0       # communication / sensing gradient range
    kappa: float = 1.0    # slope of the linear class-K function alpha(h) = kappa*h

    def __post_init__(self):
        if self.d1 <= 0.0 or self.d2 <= 0.0 or self.kappa <= 0.0:
            raise ValueError("d1, d2 and kappa must be positive")
        if not self.r > self.d_r > 0.0:
            raise ValueError("ranges must satisfy r > d_r > 0")


@dataclass(frozen=True)
class LinearConstraint:
    """One QP row: coeff_u . u + coeff_gamma * gamma + offset >= 0.

    Rows without a gamma coefficient are unrelaxable (obstacle rows).
    """

    coeff_u: Vec2
    coeff_gamma: float | None
    offset: float


def obstacle_barrier_terms(xi: ExtendedState, obs: Obstacle, params: SafetyParams):
    """Barrier value and full state gradient for one obstacle.

    Returns (h, (dh/dx, dh/dy, dh/dv, dh/dxdot, dh/dydot)).
    """
    w1 = obs.center[0] - xi.x
    w2 = obs.center[1] - xi.y
    rho = math.hypot(w1, w2)
    if rho == 0.0:
        raise BarrierDomainError("agent at obstacle center")
    v, xd, yd = xi.v, xi.xdot, xi.ydot
    big_d = rho - obs.radius - params.d1
    s = xd * w1 + yd * w2
    big_p = s / (v * rho) + v * params.d2
    ep = math.exp(-big_p)
    h = big_d * ep

    dd_dx = -w1 / rho
    dd_dy = -w2 / rho
    dp_dx = -xd / (v * rho) + s * w1 / (v * rho ** 3)
    dp_dy = -yd / (v * rho) + s * w2 / (v * rho ** 3)
    dp_dv = -s / (v * v * rho) + params.d2
    dp_dxd = w1 / (v * rho)
    dp_dyd = w2 / (v * rho)

    grad = (
        ep * (dd_dx - big_d * dp_dx),
        ep * (dd_dy - big_d * dp_dy),
        ep * (-big_d * dp_dv),
        ep * (-big_d * dp_dxd),
        ep * (-big_d * dp_dyd),
    )
    return h, grad


def lie_contract(grad5, xi: ExtendedState) -> tuple[float, Vec2]:
    """Contract a barrier state-gradient with the extended drift and input fields."""
    gx, gy, gv, gxd, gyd = grad5
    lf = gx * xi.xdot + gy * xi.ydot
    lg_a = gv + gxd * xi.xdot / xi.v + gyd * xi.ydot / xi.v
    lg_w = -gxd * xi.ydot + gyd * xi.xdot
    return lf, (lg_a, lg_w)


def obstacle_lie_derivatives(xi: ExtendedState, obs: Obstacle,
                             params: SafetyParams) -> tuple[float, float, Vec2]:
    """(h, L_f h, L_g h) for one obstacle along the extended dynamics."""
    h, grad = obstacle_barrier_terms(xi, obs, params)
    lf, lg = lie_contract(grad, xi)
    return h, lf, lg


def obstacle_barrier(xi: ExtendedState, obstacles: list[Obstacle],
                     params: SafetyParams) -> tuple[float, LinearConstraint]:
    """Barrier and unrelaxable QP row for the closest obstacle."""
    best, _ = closest_obstacle((xi.x, xi.y), obstacles)
    h, lf, lg = obstacle_lie_derivatives(xi, obstacles[best], params)
    return h, LinearConstraint(lg, None, lf + params.kappa * h)


def obstacle_row(xi: ExtendedState, obs: Obstacle,
                 params: SafetyParams) -> tuple[float, LinearConstraint]:
    """Barrier and QP row for one specific obstacle (multi-row config mode)."""
    h, lf, lg = obstacle_lie_derivatives(xi, obs, params)
    return h, LinearConstraint(lg, None, lf + params.kappa * h)


def obstacle_barrier_value(p: Vec2, heading: Vec2, v: float, obs: Obstacle,
                           params: SafetyParams) -> float:
    """Barrier value from position/heading/speed only (diagnostics path)."""
    w1 = obs.center[0] - p[0]
    w2 = obs.center[1] - p[1]
    rho = math.hypot(w1, w2)
    if rho == 0.0:
        raise BarrierDomainError("agent at obstacle center")
    big_d = rho - obs.radius - params.d1
    big_p = heading[0] * w1 / rho + heading[1] * w2 / rho + v * params.d2
    return big_d * math.exp(-big_p)


def gradient_distance(field: ScalarField, pi: Vec2, pj: Vec2) -> float:
    """mu_ij = ||grad J(p_j) - grad J(p_i)|| = 2 ||H (p_j - p_i)||."""
    gi = field.gradient(pi)
    gj = field.gradient(pj)
    return math.hypot(gj[0] - gi[0], gj[1] - gi[1])


def pair_barrier_terms(xi: ExtendedState, xj: ExtendedState, field: ScalarField,
                       params: SafetyParams, range_limited: bool = True):
    """h_ij plus its gradient with respect to agent i's extended state.

    Returns (mu, h, grad5_i). range_limited selects the proximity-mode factor
    (mu - d_r)(r - mu); without it only the separation factor (mu - d_r)
    remains, matching a topology that is fixed by assumption.
    """
    dx = xj.x - xi.x
    dy = xj.y - xi.y
    ell = math.hypot(dx, dy)
    if ell == 0.0:
        raise BarrierDomainError("coincident agent positions")
    (ha, hb), (_, hd) = field.hessian_matrix
    # M = 4 H^2; mu^2 = delta^T M delta
    m11 = 4.0 * (ha * ha + hb * hb)
    m12 = 4.0 * (ha * hb + hb * hd)
    m22 = 4.0 * (hb * hb + hd * hd)
    md1 = m11 * dx + m12 * dy
    md2 = m12 * dx + m22 * dy
    mu = math.sqrt(dx * md1 + dy * md2)
    if mu == 0.0:
        raise BarrierDomainError("coincident gradients")

    if range_limited:
        big_d = (mu - params.d_r) * (params.r - mu)
        dd_dmu = params.r + params.d_r - 2.0 * mu
    else:
        big_d = mu - params.d_r
        dd_dmu = 1.0

    vi, xdi, ydi = xi.v, xi.xdot, xi.ydot
    vj, xdj, ydj = xj.v, xj.xdot, xj.ydot
    si = xdi * dx + ydi * dy
    sj = xdj * dx + ydj * dy
    p_ij = si / (vi * ell)
    p_ji = -sj / (vj * ell)
    e1 = math.exp(-p_ij)
    e2 = math.exp(-p_ji)
    h = big_d * (e1 + e2)

    dmu_dx = -md1 / mu
    dmu_dy = -md2 / mu
    dpij_dx = -xdi / (vi * ell) + si * dx / (vi * ell ** 3)
    dpij_dy = -ydi / (vi * ell) + si * dy / (vi * ell ** 3)
    dpji_dx = xdj / (vj * ell) - sj * dx / (vj * ell ** 3)
    dpji_dy = ydj / (vj * ell) - sj * dy / (vj * ell ** 3)
    dpij_dv = -si / (vi * vi * ell)
    dpij_dxd = dx / (vi * ell)
    dpij_dyd = dy / (vi * ell)

    esum = e1 + e2
    grad = (
        dd_dmu * dmu_dx * esum + big_d * (-e1 * dpij_dx - e2 * dpji_dx),
        dd_dmu * dmu_dy * esum + big_d * (-e1 * dpij_dy - e2 * dpji_dy),
        big_d * (-e1) * dpij_dv,
        big_d * (-e1) * dpij_dxd,
        big_d * (-e1) * dpij_dyd,
    )
    return mu, h, grad


def pair_lie_derivatives(xi: ExtendedState, xj: ExtendedState, field: ScalarField,
                         params: SafetyParams,
                         range_limited: bool = True) -> tuple[float, float, float, Vec2]:
    """(mu, h_ij, L_f h_ij, L_g h_ij) with respect to agent i's dynamics."""
    mu, h, grad = pair_barrier_terms(xi, xj, field, params, range_limited)
    lf, lg = lie_contract(grad, xi)
    return mu, h, lf, lg


def connectivity_barrier(xi: ExtendedState, xj: ExtendedState, field: ScalarField,
                         params: SafetyParams,
                         range_limited: bool = True) -> tuple[float, LinearConstraint]:
    """Relaxed QP row for agent i against neighbor j.

    The gamma coefficient kappa*h_ij lets each endpoint trade its share of
    the class-K budget; the row encodes
    L_f h_ij + L_g h_ij . u_i + gamma * kappa * h_ij >= 0.
    """
    mu, h, lf, lg = pair_lie_derivatives(xi, xj, field, params, range_limited)
    return h, LinearConstraint(lg, params.kappa * h, lf)


def pair_barrier_value(pi: Vec2, oi: Vec2, pj: Vec2, oj: Vec2,
                       field: ScalarField, params: SafetyParams,
                       range_limited: bool = True) -> tuple[float, float]:
    """(mu_ij, h_ij) from positions and unit headings only (diagnostics path)."""
    dx = pj[0] - pi[0]
    dy = pj[1] - pi[1]
    ell = math.hypot(dx, dy)
    if ell == 0.0:
        raise BarrierDomainError("coincident agent positions")
    mu = gradient_distance(field, pi, pj)
    if range_limited:
        big_d = (mu - params.d_r) * (params.r - mu)
    else:
        big_d = mu - params.d_r
    p_ij = (oi[0] * dx + oi[1] * dy) / ell
    p_ji = -(oj[0] * dx + oj[1] * dy) / ell
    return mu, big_d * (math.exp(-p_ij) + math.exp(-p_ji))
