"""Nominal control laws: gradient-ascent source seeking for the leader and
the two distributed flocking laws for followers.

All flocking quantities live in gradient space: each agent measures the
field gradient locally and tries to hold a desired difference d_star to its
neighbors' average. Neighbor data arrives as ``NeighborReport`` snapshots
(speed, heading, gradient, Hessian) broadcast on the previous step; the laws
never see another agent's position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import AgentState, KinematicInput

Vec2 = tuple[float, float]
Mat2 = tuple[tuple[float, float], tuple[float, float]]


class FragmentedError(RuntimeError):
    """A follower lost all of its neighbors."""


class SingularHessianError(ValueError):
    """Field Hessian not invertible; the field violates strict concavity."""


@dataclass(frozen=True)
class ControlGains:
    k_v: float = 1.0          # source-seeking speed gain
    k_omega: float = 5.0      # source-seeking turn gain
    K_f: float = 4.0          # unconstrained flocking gain
    k1: float = 2.0           # constrained flocking speed gain
    k2: float = 10.0          # constrained flocking turn gain
    d_star: float = 0.5       # desired gradient difference to neighbor average
    d_offset: float = 0.1     # offset-point distance, in (0, 1)

    def __post_init__(self):
        for name in ("k_v", "k_omega", "K_f", "k1", "k2", "d_star"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"gain {name} must be positive")
        if not 0.0 < self.d_offset < 1.0:
            raise ValueError("d_offset must lie in (0, 1)")


@dataclass(frozen=True)
class NeighborReport:
    """What one agent broadcasts: speed, heading, local gradient and Hessian."""

    v: float
    theta: float
    grad: Vec2
    hess: Mat2


@dataclass(frozen=True)
class FlockingError:
    """Scalar flocking error e = mu - d_star with the error direction angle beta.

    mu is the norm of (neighbor gradient average - own gradient); when it
    vanishes the direction is undefined and beta_defined is False.
    """

    e: float
    beta: float
    mu: float
    beta_defined: bool


@dataclass(frozen=True)
class VectorFlockingError:
    """Vector error e_vec = mu_vec - d_star * o(theta) for the
    orientation-constrained law."""

    e_vec: Vec2
    mu_vec: Vec2


def source_seeking(theta: float, grad: Vec2, gains: ControlGains) -> KinematicInput:
    """Projected gradient ascent: v tracks the along-heading gradient component,
    omega turns the heading toward the gradient direction.

    The perpendicular gradient uses the counterclockwise quarter-turn
    (-g_y, g_x).
    """
    ox, oy = math.cos(theta), math.sin(theta)
    gx, gy = grad
    v = gains.k_v * (ox * gx + oy * gy)
    omega = -gains.k_omega * (ox * (-gy) + oy * gx)
    return KinematicInput(v, omega)


def _mean_grad_difference(own_grad: Vec2, neighbor_grads: list[Vec2]) -> Vec2:
    if not neighbor_grads:
        raise FragmentedError("no neighbors")
    n = float(len(neighbor_grads))
    sx = sum(g[0] for g in neighbor_grads)
    sy = sum(g[1] for g in neighbor_grads)
    return (sx / n - own_grad[0], sy / n - own_grad[1])


def flocking_error(own_grad_at_offset: Vec2, neighbor_grads: list[Vec2],
                   d_star: float) -> FlockingError:
    mx, my = _mean_grad_difference(own_grad_at_offset, neighbor_grads)
    mu = math.hypot(mx, my)
    if mu > 0.0:
        return FlockingError(mu - d_star, math.atan2(my, mx), mu, True)
    return FlockingError(-d_star, 0.0, 0.0, False)


def flocking_error_vector(own_grad: Vec2, theta: float, neighbor_grads: list[Vec2],
                          d_star: float) -> VectorFlockingError:
    mu_vec = _mean_grad_difference(own_grad, neighbor_grads)
    e_vec = (mu_vec[0] - d_star * math.cos(theta), mu_vec[1] - d_star * math.sin(theta))
    return VectorFlockingError(e_vec, mu_vec)


def _inv2(m: Mat2) -> Mat2:
    (a, b), (c, d) = m
    det = a * d - b * c
    if det == 0.0:
        raise SingularHessianError("field Hessian is singular")
    return ((d / det, -b / det), (-c / det, a / det))


def _mat_vec(m: Mat2, v: Vec2) -> Vec2:
    return (m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1])


def flocking_unconstrained(own: AgentState, err: FlockingError, own_hess: Mat2,
                           neighbors: list[NeighborReport],
                           gains: ControlGains) -> KinematicInput:
    """Feedback-linearized flocking law for the offset point.

    The error term steers the offset point along the inverse-Hessian image of
    the error direction; the feedforward term matches the neighbors' average
    velocity mapped through R_ik = hess_own^-1 hess_k. Projections of the
    combined vector onto the heading give v, onto the offset lever arm give
    omega. When the error direction is undefined (mu = 0) only the velocity
    matching feedforward remains.
    """
    if not neighbors:
        raise FragmentedError("no neighbors")
    hinv = _inv2(own_hess)
    n = float(len(neighbors))
    if err.beta_defined:
        oe = (math.cos(err.beta), math.sin(err.beta))
        tx = gains.K_f * err.e * oe[0]
        ty = gains.K_f * err.e * oe[1]
    else:
        tx = ty = 0.0
    for k in neighbors:
        hk_ok = _mat_vec(k.hess, (math.cos(k.theta), math.sin(k.theta)))
        tx += k.v * hk_ok[0] / n
        ty += k.v * hk_ok[1] / n
    m = _mat_vec(hinv, (tx, ty))
    ox, oy = math.cos(own.theta), math.sin(own.theta)
    v = ox * m[0] + oy * m[1]
    omega = -(oy * m[0] - ox * m[1]) / gains.d_offset
    return KinematicInput(v, omega)


def flocking_constrained(own: AgentState, err: VectorFlockingError, own_hess: Mat2,
                         neighbors: list[NeighborReport],
                         gains: ControlGains) -> KinematicInput:
    """Orientation-constrained flocking law (no feedback linearization).

    Drives the vector error e_vec = mu_vec - d_star * o(theta) to zero, which
    forces both the gradient difference norm to d_star and the heading to the
    difference direction. Q is the Hessian conjugated by the clockwise
    quarter-turn rotation.
    """
    if not neighbors:
        raise FragmentedError("no neighbors")
    ex, ey = err.e_vec
    ox, oy = math.cos(own.theta), math.sin(own.theta)
    ho = _mat_vec(own_hess, (ox, oy))
    denom = ox * ho[0] + oy * ho[1]  # o^T hess o < 0 for a concave field
    n = float(len(neighbors))
    # Q = R(-) hess R(-) with R(-) = [[0, 1], [-1, 0]]
    (a, b), (c, d) = own_hess
    q = ((-d, c), (b, -a))
    v = gains.k1 * (ex * ho[0] + ey * ho[1])
    omega = (-gains.k2 / gains.d_star) * (ex * oy - ey * ox)
    for k in neighbors:
        hk_ok = _mat_vec(k.hess, (math.cos(k.theta), math.sin(k.theta)))
        v += k.v * (ox * hk_ok[0] + oy * hk_ok[1]) / denom / n
        q_hk_ok = _mat_vec(q, hk_ok)
        omega += (k.v / gains.d_star) * (oy * q_hk_ok[0] - ox * q_hk_ok[1]) / denom / n
    return KinematicInput(v, omega)


def reference_acceleration(v_now: float, v_prev: float | None, dt: float) -> float:
    """Backward-difference acceleration reference for the QP; 0 with no history."""
    if v_prev is None:
        return 0.0
    return (v_now - v_prev) / dt
