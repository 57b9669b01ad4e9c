import math

import numpy as np
import pytest

from flockcbf.qpsolver import QpProblem, solve, verify_kkt
from flockcbf.qpsolver import _stack_constraints


def brute_force_solve(p: QpProblem):
    """Exhaustive active-set enumeration: try every constraint subset as
    equalities, keep the feasible KKT point with minimal objective."""
    big_n, big_b, _ = _stack_constraints(p)
    m = big_n.shape[0]
    z_ref = np.asarray(p.z_ref, dtype=float)
    best = None
    for mask in range(1 << m):
        idx = [i for i in range(m) if mask >> i & 1]
        if len(idx) > len(z_ref) + 2:
            continue
        na = big_n[idx]
        if idx:
            gram = na @ na.T
            try:
                lam = np.linalg.solve(gram, big_b[idx] - na @ z_ref)
            except np.linalg.LinAlgError:
                continue
            z = z_ref + na.T @ lam
            if np.any(lam < -1e-10):
                continue
        else:
            z = z_ref.copy()
        if m and np.any(big_n @ z - big_b < -1e-9):
            continue
        obj = float(np.dot(z - z_ref, z - z_ref))
        if best is None or obj < best[0] - 1e-14:
            best = (obj, z)
    return None if best is None else best[1]


def test_unconstrained_returns_reference():
    sol = solve(QpProblem((1.0, 2.0)))
    assert sol.z_star == (1.0, 2.0)
    assert sol.status == "optimal"
    assert sol.kkt_residual <= 1e-12


def test_halfspace_projection():
    # project (1,2) onto (1,1).z >= 4: shift 1/2 along (1,1)
    sol = solve(QpProblem((1.0, 2.0), rows=(((1.0, 1.0), 4.0),)))
    assert sol.z_star[0] == pytest.approx(1.5, abs=1e-12)
    assert sol.z_star[1] == pytest.approx(2.5, abs=1e-12)
    assert sol.active_set == (0,)


def test_box_clamp():
    sol = solve(QpProblem((15.0,), boxes=((0, -10.0, 10.0),)))
    assert sol.z_star[0] == pytest.approx(10.0, abs=1e-12)


def test_slack_constraints_do_not_move_solution():
    sol = solve(QpProblem((1.0, 2.0), rows=(((1.0, 0.0), -5.0),),
                boxes=((1, -100.0, 100.0),)))
    assert sol.z_star == (1.0, 2.0)
    assert sol.active_set == ()


def test_infeasible_opposing_rows():
    sol = solve(QpProblem((0.0,), rows=(((1.0,), 1.0), ((-1.0,), 0.0))))
    assert sol.status == "infeasible"


def test_infeasible_row_against_box():
    sol = solve(QpProblem((0.0,), rows=(((1.0,), 20.0),),
                boxes=((0, -10.0, 10.0),)))
    assert sol.status == "infeasible"


def test_verify_kkt_solution_and_violations():
    p = QpProblem((1.0, 2.0), rows=(((1.0, 1.0), 4.0),))
    sol = solve(p)
    assert verify_kkt(p, sol.z_star) <= 1e-8
    # returning z_ref despite the violated row: residual equals the violation
    assert verify_kkt(p, (1.0, 2.0)) == pytest.approx(1.0, abs=1e-12)
    # hand KKT point
    assert verify_kkt(p, (1.5, 2.5)) <= 1e-12


def _random_problem(rng):
    n = int(rng.integers(2, 5))
    z_feas = rng.uniform(-2.0, 2.0, n)
    rows = []
    for _ in range(int(rng.integers(0, 4))):
        a = rng.normal(size=n)
        slack = abs(rng.uniform(0.0, 1.0))
        rows.append((tuple(a), float(a @ z_feas - slack)))
    boxes = []
    for i in range(n):
        if rng.uniform() < 0.5:
            boxes.append((i, float(z_feas[i] - abs(rng.uniform(0.1, 2.0))),
                          float(z_feas[i] + abs(rng.uniform(0.1, 2.0)))))
    z_ref = rng.uniform(-5.0, 5.0, n)
    return QpProblem(tuple(z_ref), tuple(rows), tuple(boxes))


def test_matches_enumeration_oracle_on_random_problems():
    rng = np.random.default_rng(31)
    for _ in range(100):
        p = _random_problem(rng)
        sol = solve(p)
        assert sol.status == "optimal"
        expected = brute_force_solve(p)
        assert expected is not None
        assert np.allclose(sol.z_star, expected, atol=1e-8, rtol=0.0)
        assert sol.kkt_residual <= 1e-8
        assert verify_kkt(p, sol.z_star) <= 1e-8


def test_idempotent_at_optimum():
    rng = np.random.default_rng(32)
    for _ in range(50):
        p = _random_problem(rng)
        sol = solve(p)
        again = solve(QpProblem(sol.z_star, p.rows, p.boxes))
        assert np.allclose(again.z_star, sol.z_star, atol=1e-10)


def test_adding_strictly_slack_row_keeps_solution():
    rng = np.random.default_rng(33)
    for _ in range(50):
        p = _random_problem(rng)
        sol = solve(p)
        z = np.asarray(sol.z_star)
        a = rng.normal(size=len(z))
        extra = (tuple(a), float(a @ z - 1.0))  # satisfied with slack 1
        sol2 = solve(QpProblem(p.z_ref, p.rows + (extra,), p.boxes))
        assert np.allclose(sol2.z_star, sol.z_star, atol=1e-9)


def test_deterministic_resolve():
    rng = np.random.default_rng(34)
    for _ in range(20):
        p = _random_problem(rng)
        assert solve(p) == solve(p)


def test_problem_validation():
    with pytest.raises(ValueError):
        QpProblem(())
    with pytest.raises(ValueError):
        QpProblem((0.0,), rows=(((1.0, 2.0), 0.0),))
    with pytest.raises(ValueError):
        QpProblem((0.0,), boxes=((0, 1.0, -1.0),))
    with pytest.raises(ValueError):
        QpProblem((math.nan,))


def test_primal_feasibility_of_reported_optimum():
    rng = np.random.default_rng(35)
    for _ in range(100):
        p = _random_problem(rng)
        sol = solve(p)
        big_n, big_b, _ = _stack_constraints(p)
        if big_n.shape[0]:
            assert float(np.min(big_n @ np.asarray(sol.z_star) - big_b)) >= -1e-9
