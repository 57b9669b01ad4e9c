"""Exact solver for the small strictly convex QPs of the safety filter.

    minimize    1/2 ||z - z_ref||^2
    subject to  a_k . z >= b_k          (inequality rows)
                lo_i <= z_i <= hi_i     (box bounds on selected variables)

The objective Hessian is the identity, so the unconstrained optimum is
z_ref and the solver walks the dual active-set path from there: repeatedly
pick the lowest-index violated constraint, project it against the current
working set, and take full or partial steps (dropping blocking constraints)
until it becomes active with a nonnegative multiplier. This is finite,
needs no feasible starting point, and detects infeasibility when a violated
constraint is linearly dependent on the working set with no droppable
multiplier. All tie-breaks are by lowest index, so solutions are
deterministic.

Problem sizes here are tiny (2 inputs plus one relaxation variable per
neighbor), which is why a bespoke dense implementation beats pulling in a
general-purpose solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_FEAS_TOL = 1e-10
_DEP_TOL = 1e-10
_TIGHT_TOL = 1e-8


@dataclass(frozen=True)
class QpProblem:
    z_ref: tuple[float, ...]
    rows: tuple[tuple[tuple[float, ...], float], ...] = ()   # (a, b): a.z >= b
    boxes: tuple[tuple[int, float, float], ...] = ()         # (index, lower, upper)

    def __post_init__(self):
        n = len(self.z_ref)
        if n < 1:
            raise ValueError("empty decision vector")
        for a, b in self.rows:
            if len(a) != n:
                raise ValueError("row dimension mismatch")
            if not all(math.isfinite(c) for c in a) or not math.isfinite(b):
                raise ValueError("non-finite constraint row")
        for idx, lo, hi in self.boxes:
            if not 0 <= idx < n:
                raise ValueError("box index out of range")
            if lo > hi:
                raise ValueError("box lower bound above upper bound")
        if not all(math.isfinite(c) for c in self.z_ref):
            raise ValueError("non-finite reference point")


@dataclass(frozen=True)
class QpSolution:
    z_star: tuple[float, ...]
    status: str                      # "optimal" | "infeasible"
    active_set: tuple[int, ...]      # indices of tight user rows
    kkt_residual: float


def _stack_constraints(p: QpProblem) -> tuple[np.ndarray, np.ndarray, int]:
    """All constraints as normals/offsets; user rows first, then box sides."""
    n = len(p.z_ref)
    normals = [np.asarray(a, dtype=float) for a, _ in p.rows]
    offsets = [float(b) for _, b in p.rows]
    for idx, lo, hi in p.boxes:
        if math.isfinite(lo):
            e = np.zeros(n)
            e[idx] = 1.0
            normals.append(e)
            offsets.append(lo)
        if math.isfinite(hi):
            e = np.zeros(n)
            e[idx] = -1.0
            normals.append(e)
            offsets.append(-hi)
    if normals:
        return np.vstack(normals), np.asarray(offsets), len(p.rows)
    return np.zeros((0, n)), np.zeros(0), 0


def solve(p: QpProblem) -> QpSolution:
    """Exact minimizer via dual active-set iteration."""
    z = np.asarray(p.z_ref, dtype=float)
    big_n, big_b, n_user = _stack_constraints(p)
    m = big_n.shape[0]
    if m == 0:
        return QpSolution(tuple(z), "optimal", (), 0.0)

    active: list[int] = []
    lam: list[float] = []
    max_iter = 100 + 10 * m
    for _ in range(max_iter):
        slack = big_n @ z - big_b
        entering = -1
        for i in range(m):
            if i in active:
                continue
            if slack[i] < -_FEAS_TOL * max(1.0, abs(big_b[i])):
                entering = i
                break
        if entering < 0:
            return _finish(p, z, big_n, big_b, n_user, active, lam)
        u = 0.0  # multiplier accumulated by the entering constraint
        n_p = big_n[entering]
        for _ in range(max_iter):
            if active:
                na = big_n[active]
                gram = na @ na.T
                r = np.linalg.lstsq(gram, na @ n_p, rcond=None)[0]
                d = n_p - na.T @ r
            else:
                r = np.zeros(0)
                d = n_p.copy()
            d_norm2 = float(d @ d)
            s_p = float(n_p @ z - big_b[entering])
            # partial step bound from the working-set multipliers
            t1 = math.inf
            k_block = -1
            for k in range(len(active)):
                if r[k] > _DEP_TOL:
                    ratio = lam[k] / r[k]
                    if ratio < t1 - 1e-15:
                        t1, k_block = ratio, k
            if d_norm2 <= _DEP_TOL * float(n_p @ n_p):
                if not math.isfinite(t1):
                    return QpSolution(tuple(z), "infeasible", (), math.inf)
                for k in range(len(active)):
                    lam[k] -= t1 * r[k]
                u += t1
                active.pop(k_block)
                lam.pop(k_block)
                continue
            t2 = -s_p / d_norm2
            t = min(t1, t2)
            z = z + t * d
            for k in range(len(active)):
                lam[k] -= t * r[k]
            u += t
            if t2 <= t1:
                active.append(entering)
                lam.append(u)
                break
            active.pop(k_block)
            lam.pop(k_block)
    raise RuntimeError("active-set iteration failed to terminate")


def _finish(p, z, big_n, big_b, n_user, active, lam) -> QpSolution:
    slack = big_n @ z - big_b
    primal = max(0.0, float(np.max(-slack))) if len(slack) else 0.0
    resid = np.array(z) - np.asarray(p.z_ref)
    for k, idx in enumerate(active):
        resid -= lam[k] * big_n[idx]
    stationarity = float(np.linalg.norm(resid))
    comp = 0.0
    for k, idx in enumerate(active):
        comp = max(comp, abs(lam[k] * slack[idx]))
    tight = tuple(
        i for i in range(n_user)
        if abs(slack[i]) <= _TIGHT_TOL * max(1.0, abs(big_b[i]))
    )
    return QpSolution(tuple(float(v) for v in z), "optimal", tight,
                      max(primal, stationarity, comp))


def verify_kkt(p: QpProblem, z) -> float:
    """Independent KKT residual for a candidate point.

    Max of primal infeasibility, the norm of the stationarity defect after
    fitting nonnegative multipliers on the tight constraints (exact NNLS by
    subset enumeration; sizes here are tiny), and complementary slackness.
    """
    zv = np.asarray(z, dtype=float)
    big_n, big_b, _ = _stack_constraints(p)
    if big_n.shape[0] == 0:
        return float(np.linalg.norm(zv - np.asarray(p.z_ref)))
    slack = big_n @ zv - big_b
    primal = max(0.0, float(np.max(-slack)))
    tight = [i for i in range(len(slack))
             if abs(slack[i]) <= _TIGHT_TOL * max(1.0, abs(big_b[i]))]
    target = zv - np.asarray(p.z_ref)
    best_resid = float(np.linalg.norm(target))
    best_lam = np.zeros(len(tight))
    for mask in range(1, 1 << len(tight)):
        subset = [tight[k] for k in range(len(tight)) if mask >> k & 1]
        na = big_n[subset]
        sol, *_ = np.linalg.lstsq(na.T, target, rcond=None)
        if np.any(sol < -1e-12):
            continue
        resid = float(np.linalg.norm(na.T @ sol - target))
        if resid < best_resid - 1e-15:
            best_resid = resid
            best_lam = np.zeros(len(tight))
            for pos, k in enumerate([k for k in range(len(tight)) if mask >> k & 1]):
                best_lam[k] = sol[pos]
    comp = 0.0
    for k, i in enumerate(tight):
        comp = max(comp, abs(best_lam[k] * slack[i]))
    return max(primal, best_resid, comp)
