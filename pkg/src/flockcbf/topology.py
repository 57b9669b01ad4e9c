"""Communication graph construction, leader selection and connectivity tests.

Graphs are immutable snapshots: either a fixed adjacency supplied by the
scenario, or recomputed every step from gradient proximity (an edge exists
exactly when the inter-agent gradient difference is strictly below the
sensing range r).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .environment import ScalarField

Vec2 = tuple[float, float]


@dataclass(frozen=True)
class Graph:
    n: int
    neighbors: tuple[tuple[int, ...], ...]  # sorted adjacency lists, no self-loops

    @staticmethod
    def from_edges(n: int, edges) -> "Graph":
        adj: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            if i == j:
                raise ValueError("self-loop edge")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) out of range")
            adj[i].add(j)
            adj[j].add(i)
        return Graph(n, tuple(tuple(sorted(s)) for s in adj))

    @staticmethod
    def complete(n: int) -> "Graph":
        return Graph(n, tuple(tuple(j for j in range(n) if j != i) for i in range(n)))

    def has_edge(self, i: int, j: int) -> bool:
        return j in self.neighbors[i]

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edge list with i < j, sorted."""
        return [(i, j) for i in range(self.n) for j in self.neighbors[i] if i < j]


@dataclass(frozen=True)
class LeaderAssignment:
    leader: int
    followers: frozenset[int]


def select_leader(initial_positions: list[Vec2], field: ScalarField) -> LeaderAssignment:
    """Agent with the largest signal strength at t = 0; ties to lowest index.

    The assignment is made once from initial positions and never revisited.
    """
    if not initial_positions:
        raise ValueError("no agents")
    best_i, best_j = 0, field.eval(initial_positions[0])
    for i in range(1, len(initial_positions)):
        j = field.eval(initial_positions[i])
        if j > best_j:
            best_i, best_j = i, j
    followers = frozenset(range(len(initial_positions))) - {best_i}
    return LeaderAssignment(best_i, followers)


def proximity_edges(gradients: list[Vec2], r: float) -> Graph:
    """Edge (i, j) iff ||grad_j - grad_i|| < r (strict)."""
    if r <= 0.0:
        raise ValueError("range r must be positive")
    n = len(gradients)
    edges = []
    for i in range(n):
        gi = gradients[i]
        for j in range(i + 1, n):
            gj = gradients[j]
            if math.hypot(gj[0] - gi[0], gj[1] - gi[1]) < r:
                edges.append((i, j))
    return Graph.from_edges(n, edges)


def is_connected(g: Graph) -> bool:
    """Breadth-first search from node 0 reaches every node."""
    if g.n <= 1:
        return True
    seen = [False] * g.n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        i = queue.popleft()
        for j in g.neighbors[i]:
            if not seen[j]:
                seen[j] = True
                count += 1
                queue.append(j)
    return count == g.n


def follower_neighbors(g: Graph, i: int, assignment: LeaderAssignment) -> tuple[int, ...]:
    """Neighbor set used by follower i's flocking law (may include the leader)."""
    if i == assignment.leader:
        raise ValueError("the leader has no flocking neighbor set")
    return g.neighbors[i]
