import math

import numpy as np
import pytest

from flockcbf.control import (
    ControlGains,
    FragmentedError,
    NeighborReport,
    SingularHessianError,
    flocking_constrained,
    flocking_error,
    flocking_error_vector,
    flocking_unconstrained,
    reference_acceleration,
    source_seeking,
)
from flockcbf.dynamics import AgentState

GAINS = ControlGains(k_v=1.0, k_omega=5.0, K_f=4.0, k1=2.0, k2=10.0,
                     d_star=0.5, d_offset=0.1)
HESS_I = ((-2.0, 0.0), (0.0, -2.0))  # field Hessian for H = identity


def test_source_seeking_at_source():
    u = source_seeking(0.73, (0.0, 0.0), GAINS)
    assert (u.v, u.omega) == (0.0, 0.0)


def test_source_seeking_hand_values():
    u = source_seeking(math.pi, (-2.0, 0.0), GAINS)
    assert u.v == pytest.approx(2.0, abs=1e-12)
    assert u.omega == pytest.approx(0.0, abs=1e-12)
    # perp convention: grad (0,-2) quarter-turned ccw gives (2, 0)
    u = source_seeking(0.0, (0.0, -2.0), GAINS)
    assert u.v == pytest.approx(0.0, abs=1e-12)
    assert u.omega == pytest.approx(-10.0, abs=1e-12)


def test_flocking_error_hand_values():
    err = flocking_error((0.0, 0.0), [(-0.6, -0.8)], 0.5)
    assert err.mu == pytest.approx(1.0, abs=1e-15)
    assert err.e == pytest.approx(0.5, abs=1e-15)
    assert err.beta == pytest.approx(math.atan2(-0.8, -0.6), abs=1e-15)
    assert err.beta_defined


def test_flocking_error_zero_difference_flagged():
    err = flocking_error((0.3, 0.4), [(0.3, 0.4)], 0.5)
    assert err.mu == 0.0
    assert err.e == -0.5
    assert not err.beta_defined


def test_flocking_error_mean_cancels():
    err = flocking_error((0.0, 0.0), [(1.0, 0.0), (-1.0, 0.0)], 0.5)
    assert err.mu == 0.0
    assert err.e == -0.5


def test_flocking_error_fragmented():
    with pytest.raises(FragmentedError):
        flocking_error((0.0, 0.0), [], 0.5)


def test_unconstrained_zero_error_zero_velocity_fixed_point():
    err = flocking_error((1.0, 0.0), [(1.5, 0.0)], 0.5)
    assert err.e == pytest.approx(0.0, abs=1e-15)
    rep = NeighborReport(0.0, 0.3, (1.5, 0.0), HESS_I)
    u = flocking_unconstrained(AgentState(0, 0, 0.9), err, HESS_I, [rep], GAINS)
    assert u.v == pytest.approx(0.0, abs=1e-12)
    assert u.omega == pytest.approx(0.0, abs=1e-12)


def test_unconstrained_hand_matrix_algebra():
    # H = I: R_ik = I; error term contributes 2, feedforward 1
    err = flocking_error((0.0, 0.0), [(-1.0, 0.0)], 0.5)
    assert err.e == pytest.approx(0.5)
    assert err.beta == pytest.approx(math.pi)
    rep = NeighborReport(1.0, 0.0, (-1.0, 0.0), HESS_I)
    u = flocking_unconstrained(AgentState(0, 0, 0.0), err, HESS_I, [rep], GAINS)
    assert u.v == pytest.approx(2.0, abs=1e-12)
    assert u.omega == pytest.approx(0.0, abs=1e-12)


def test_unconstrained_orthogonal_heading_kills_feedforward_speed():
    err = flocking_error((0.0, 0.0), [(-1.0, 0.0)], 0.5)
    rep = NeighborReport(1.0, 0.0, (-1.0, 0.0), HESS_I)
    u = flocking_unconstrained(AgentState(0, 0, math.pi / 2), err, HESS_I,
                               [rep], GAINS)
    # <o_i, R_ik o_k> = 0 and the error direction is along -x as well
    assert u.v == pytest.approx(0.0, abs=1e-12)


def test_unconstrained_undefined_direction_keeps_feedforward_only():
    err = flocking_error((1.0, 0.0), [(1.0, 0.0)], 0.5)
    assert not err.beta_defined
    rep = NeighborReport(2.0, 0.0, (1.0, 0.0), HESS_I)
    u = flocking_unconstrained(AgentState(0, 0, 0.0), err, HESS_I, [rep], GAINS)
    assert u.v == pytest.approx(2.0, abs=1e-12)  # velocity matching alone


def test_unconstrained_singular_hessian():
    err = flocking_error((0.0, 0.0), [(-1.0, 0.0)], 0.5)
    rep = NeighborReport(1.0, 0.0, (-1.0, 0.0), HESS_I)
    with pytest.raises(SingularHessianError):
        flocking_unconstrained(AgentState(0, 0, 0.0), err,
                               ((0.0, 0.0), (0.0, 0.0)), [rep], GAINS)


def test_error_vector_hand_values():
    ev = flocking_error_vector((0.0, 0.0), 0.0, [(-0.6, -0.8)], 0.5)
    assert ev.e_vec[0] == pytest.approx(-1.1, abs=1e-15)
    assert ev.e_vec[1] == pytest.approx(-0.8, abs=1e-15)

    # converged configuration: mu_vec aligned with the heading at norm d_star
    th = 0.6
    ev = flocking_error_vector(
        (0.0, 0.0), th, [(0.5 * math.cos(th), 0.5 * math.sin(th))], 0.5)
    assert ev.e_vec == pytest.approx((0.0, 0.0), abs=1e-15)

    ev = flocking_error_vector((1.0, 0.0), math.pi / 2, [(1.0, 0.0)], 0.5)
    assert ev.e_vec[0] == pytest.approx(0.0, abs=1e-15)
    assert ev.e_vec[1] == pytest.approx(-0.5, abs=1e-15)


def test_constrained_converged_fixed_point():
    th = 0.0
    ev = flocking_error_vector((0.0, 0.0), th, [(0.5, 0.0)], 0.5)
    assert ev.e_vec == pytest.approx((0.0, 0.0), abs=1e-15)
    rep = NeighborReport(0.0, 0.2, (0.5, 0.0), HESS_I)
    u = flocking_constrained(AgentState(0, 0, th), ev, HESS_I, [rep], GAINS)
    assert u.v == pytest.approx(0.0, abs=1e-12)
    assert u.omega == pytest.approx(0.0, abs=1e-12)


def _static_error(e_vec):
    from flockcbf.control import VectorFlockingError
    return VectorFlockingError(e_vec, e_vec)


def test_constrained_hand_matrix_algebra():
    rep = NeighborReport(0.0, 0.0, (0.0, 0.0), HESS_I)
    u = flocking_constrained(AgentState(0, 0, 0.0), _static_error((1.0, 0.0)),
                             HESS_I, [rep], GAINS)
    assert u.v == pytest.approx(-4.0, abs=1e-12)  # 2 * (1,0).(-2I).(1,0)^T

    u = flocking_constrained(AgentState(0, 0, 0.0), _static_error((0.0, 1.0)),
                             HESS_I, [rep], GAINS)
    assert u.omega == pytest.approx(20.0, abs=1e-12)  # (-10/0.5) * (0,1).(0,-1)^T


def test_both_laws_permutation_invariant():
    rng = np.random.default_rng(16)
    for _ in range(30):
        reps = [NeighborReport(rng.uniform(-2, 2), rng.uniform(-3, 3),
                               tuple(rng.uniform(-4, 4, 2)), HESS_I)
                for _ in range(4)]
        own = AgentState(0.0, 0.0, rng.uniform(-3, 3))
        grads = [r.grad for r in reps]
        err = flocking_error((0.2, -0.1), grads, 0.5)
        ev = flocking_error_vector((0.2, -0.1), own.theta, grads, 0.5)
        perm = [reps[2], reps[0], reps[3], reps[1]]
        u1 = flocking_unconstrained(own, err, HESS_I, reps, GAINS)
        u2 = flocking_unconstrained(own, err, HESS_I, perm, GAINS)
        assert u1.v == pytest.approx(u2.v, rel=1e-12)
        assert u1.omega == pytest.approx(u2.omega, rel=1e-12)
        c1 = flocking_constrained(own, ev, HESS_I, reps, GAINS)
        c2 = flocking_constrained(own, ev, HESS_I, perm, GAINS)
        assert c1.v == pytest.approx(c2.v, rel=1e-12)
        assert c1.omega == pytest.approx(c2.omega, rel=1e-12)


def test_reference_acceleration():
    assert reference_acceleration(2.0, 1.0, 0.01) == pytest.approx(100.0)
    assert reference_acceleration(1.5, 1.5, 0.01) == 0.0
    assert reference_acceleration(2.0, None, 0.01) == 0.0


def test_gains_validation():
    with pytest.raises(ValueError):
        ControlGains(K_f=-1.0)
    with pytest.raises(ValueError):
        ControlGains(d_offset=1.5)
