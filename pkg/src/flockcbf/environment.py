"""Scalar signal field and static circular obstacles.

The field is a strictly concave quadratic J(p) = -(p - c)^T H (p - c) with
H symmetric positive definite, so its unique maximum J* = 0 sits at the
source location c. Value, gradient and Hessian are exposed through one
interface so controllers never touch the quadratic form directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

Vec2 = tuple[float, float]
Mat2 = tuple[tuple[float, float], tuple[float, float]]


class EnvironmentError_(ValueError):
    """Raised for geometrically invalid field or obstacle definitions."""


def _as_mat2(m) -> Mat2:
    (a, b), (c, d) = m
    return ((float(a), float(b)), (float(c), float(d)))


@dataclass(frozen=True)
class ScalarField:
    """Concave quadratic signal field J(p) = -(p - c)^T H (p - c).

    hessian_matrix is the (symmetric, positive definite) shape matrix H,
    not the Hessian of J; the Hessian of J is the constant -2H.
    """

    hessian_matrix: Mat2 = ((1.0, 0.0), (0.0, 1.0))
    center: Vec2 = (0.0, 0.0)

    def __post_init__(self):
        h = _as_mat2(self.hessian_matrix)
        object.__setattr__(self, "hessian_matrix", h)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        (a, b), (c, d) = h
        if abs(b - c) > 1e-12:
            raise EnvironmentError_("field shape matrix must be symmetric")
        # symmetric 2x2 is positive definite iff a > 0 and det > 0
        if a <= 0.0 or a * d - b * c <= 0.0:
            raise EnvironmentError_("field shape matrix must be positive definite")

    def eval(self, p: Vec2) -> float:
        """Signal strength at p; maximal (= 0) at the source."""
        dx = p[0] - self.center[0]
        dy = p[1] - self.center[1]
        (a, b), (_, d) = self.hessian_matrix
        return -(dx * (a * dx + b * dy) + dy * (b * dx + d * dy))

    def gradient(self, p: Vec2) -> Vec2:
        """Row vector dJ/dp = -2 (p - c)^T H."""
        dx = p[0] - self.center[0]
        dy = p[1] - self.center[1]
        (a, b), (_, d) = self.hessian_matrix
        return (-2.0 * (a * dx + b * dy), -2.0 * (b * dx + d * dy))

    def hessian(self, p: Vec2) -> Mat2:
        """Second derivative of J; constant -2H, symmetric negative definite."""
        (a, b), (_, d) = self.hessian_matrix
        return ((-2.0 * a, -2.0 * b), (-2.0 * b, -2.0 * d))


@dataclass(frozen=True)
class Obstacle:
    """Open circular disk; agents must stay strictly outside."""

    center: Vec2
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0.0:
            raise EnvironmentError_("obstacle radius must be positive")

    def boundary_distance(self, p: Vec2) -> float:
        """Signed distance from p to the disk boundary (negative inside)."""
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1]) - self.radius


def closest_obstacle(p: Vec2, obstacles: list[Obstacle]) -> tuple[int, float]:
    """Index and signed boundary distance of the nearest obstacle.

    Ties break toward the lowest index. Raises on an empty list so callers
    can skip the obstacle constraint explicitly.
    """
    if not obstacles:
        raise EnvironmentError_("no obstacles")
    best_i = 0
    best_d = obstacles[0].boundary_distance(p)
    for i in range(1, len(obstacles)):
        d = obstacles[i].boundary_distance(p)
        if d < best_d:
            best_i, best_d = i, d
    return best_i, best_d
