"""Unicycle kinematics and the 5-state extension used by the barrier filters.

Two state representations coexist:

* ``AgentState`` (x, y, theta) driven by (v, omega) -- the plain unicycle.
* ``ExtendedState`` (x, y, v, xdot, ydot) driven by (a, omega) -- the lifted
  system whose drift/input fields make distance barriers relative degree one.
  The input matrix divides by v, so v must stay above ``V_FLOOR``.

Both are integrated with classical RK4 under zero-order-hold inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

V_FLOOR = 0.01

Vec2 = tuple[float, float]


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    if -math.pi < theta <= math.pi:
        return theta
    t = math.atan2(math.sin(theta), math.cos(theta))
    return math.pi if t == -math.pi else t


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class ExtendedState:
    """Lifted unicycle state (x, y, v, xdot, ydot) with (xdot, ydot) = v * o(theta)."""

    x: float
    y: float
    v: float
    xdot: float
    ydot: float


@dataclass(frozen=True)
class KinematicInput:
    v: float
    omega: float


@dataclass(frozen=True)
class ExtendedInput:
    a: float
    omega: float


def step_kinematic(s: AgentState, u: KinematicInput, dt: float) -> AgentState:
    """One RK4 step of (xdot, ydot, thetadot) = (v cos, v sin, omega), u held."""
    v, w = u.v, u.omega

    def deriv(th):
        return v * math.cos(th), v * math.sin(th)

    th0 = s.theta
    k1x, k1y = deriv(th0)
    k2x, k2y = deriv(th0 + 0.5 * dt * w)
    k3x, k3y = k2x, k2y
    k4x, k4y = deriv(th0 + dt * w)
    x = s.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    y = s.y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return AgentState(x, y, wrap_angle(th0 + dt * w))


def _ext_deriv(x, y, v, xd, yd, a, w):
    # f(xi) + g(xi) u for the lifted system; g divides by v
    return (xd, yd, a, (xd / v) * a - yd * w, (yd / v) * a + xd * w)


def step_extended(
    s: ExtendedState, u: ExtendedInput, dt: float, v_floor: float = V_FLOOR
) -> ExtendedState:
    """One RK4 step of the lifted dynamics.

    After the step (xdot, ydot) is rescaled to norm v, which the continuous
    flow preserves exactly; if v would cross below v_floor it is clamped and
    the direction kept.
    """
    a, w = u.a, u.omega
    x, y, v, xd, yd = s.x, s.y, s.v, s.xdot, s.ydot
    k1 = _ext_deriv(x, y, v, xd, yd, a, w)
    k2 = _ext_deriv(
        x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1], v + 0.5 * dt * k1[2],
        xd + 0.5 * dt * k1[3], yd + 0.5 * dt * k1[4], a, w)
    k3 = _ext_deriv(
        x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1], v + 0.5 * dt * k2[2],
        xd + 0.5 * dt * k2[3], yd + 0.5 * dt * k2[4], a, w)
    k4 = _ext_deriv(
        x + dt * k3[0], y + dt * k3[1], v + dt * k3[2],
        xd + dt * k3[3], yd + dt * k3[4], a, w)
    x1 = x + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    y1 = y + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    v1 = v + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    xd1 = xd + dt / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    yd1 = yd + dt / 6.0 * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
    if v1 < v_floor:
        v1 = v_floor
    norm = math.hypot(xd1, yd1)
    scale = v1 / norm
    return ExtendedState(x1, y1, v1, xd1 * scale, yd1 * scale)


def to_extended(s: AgentState, v: float, v_floor: float = V_FLOOR) -> ExtendedState:
    """Lift (x, y, theta) to the 5-state representation at speed v >= v_floor."""
    if v < v_floor:
        raise ValueError(f"speed {v} below floor {v_floor}")
    return ExtendedState(s.x, s.y, v, v * math.cos(s.theta), v * math.sin(s.theta))


def heading_of(s: ExtendedState) -> float:
    return math.atan2(s.ydot, s.xdot)


def offset_point(s: AgentState, d: float) -> Vec2:
    """Point a distance d ahead of the center along the heading."""
    return (s.x + d * math.cos(s.theta), s.y + d * math.sin(s.theta))
