import math

import numpy as np
import pytest

from flockcbf.environment import (
    EnvironmentError_,
    Obstacle,
    ScalarField,
    closest_obstacle,
)

IDENTITY = ScalarField()


def test_eval_at_source_is_maximum():
    assert IDENTITY.eval((0.0, 0.0)) == 0.0


def test_eval_hand_values():
    assert IDENTITY.eval((1.0, 1.0)) == -2.0
    assert IDENTITY.eval((3.5, 3.0)) == -21.25


def test_gradient_hand_values():
    assert IDENTITY.gradient((0.0, 0.0)) == (0.0, 0.0)
    assert IDENTITY.gradient((1.0, 0.0)) == (-2.0, 0.0)
    gx, gy = IDENTITY.gradient((0.3, 0.4))
    assert gx == pytest.approx(-0.6, abs=1e-15)
    assert gy == pytest.approx(-0.8, abs=1e-15)


def test_hessian_constant():
    assert IDENTITY.hessian((0.0, 0.0)) == ((-2.0, 0.0), (0.0, -2.0))
    assert IDENTITY.hessian((17.0, -3.0)) == ((-2.0, 0.0), (0.0, -2.0))
    f = ScalarField(hessian_matrix=((1.0, 0.0), (0.0, 2.0)))
    assert f.hessian((0.5, 0.5)) == ((-2.0, 0.0), (0.0, -4.0))


def test_hessian_inverse_diagonal():
    h = np.array(IDENTITY.hessian((0.0, 0.0)))
    inv = np.linalg.inv(h)
    assert np.allclose(inv, [[-0.5, 0.0], [0.0, -0.5]])


def test_shifted_center():
    f = ScalarField(center=(1.0, -2.0))
    assert f.eval((1.0, -2.0)) == 0.0
    assert f.gradient((1.0, -2.0)) == (0.0, 0.0)


def test_field_validation():
    with pytest.raises(EnvironmentError_):
        ScalarField(hessian_matrix=((1.0, 2.0), (0.5, 1.0)))  # not symmetric
    with pytest.raises(EnvironmentError_):
        ScalarField(hessian_matrix=((-1.0, 0.0), (0.0, 1.0)))  # not PD
    with pytest.raises(EnvironmentError_):
        ScalarField(hessian_matrix=((1.0, 2.0), (2.0, 1.0)))  # det < 0


def _random_spd(rng):
    a = rng.uniform(0.2, 3.0)
    d = rng.uniform(0.2, 3.0)
    b = rng.uniform(-1.0, 1.0) * math.sqrt(a * d) * 0.9
    return ((a, b), (b, d))


def test_gradient_matches_finite_difference():
    rng = np.random.default_rng(7)
    step = 1e-5
    for _ in range(200):
        f = ScalarField(_random_spd(rng), center=tuple(rng.uniform(-2, 2, 2)))
        p = tuple(rng.uniform(-5, 5, 2))
        fd = (
            (f.eval((p[0] + step, p[1])) - f.eval((p[0] - step, p[1]))) / (2 * step),
            (f.eval((p[0], p[1] + step)) - f.eval((p[0], p[1] - step))) / (2 * step),
        )
        assert np.allclose(f.gradient(p), fd, rtol=1e-6, atol=1e-8)


def test_hessian_matches_finite_difference_of_gradient():
    rng = np.random.default_rng(8)
    step = 1e-5
    for _ in range(200):
        f = ScalarField(_random_spd(rng), center=tuple(rng.uniform(-2, 2, 2)))
        p = rng.uniform(-5, 5, 2)
        fd = np.empty((2, 2))
        for k in range(2):
            hi = p.copy()
            lo = p.copy()
            hi[k] += step
            lo[k] -= step
            fd[:, k] = (np.array(f.gradient(tuple(hi)))
                        - np.array(f.gradient(tuple(lo)))) / (2 * step)
        assert np.allclose(f.hessian(tuple(p)), fd, rtol=1e-6, atol=1e-8)


def test_strict_concavity_spot_check():
    rng = np.random.default_rng(9)
    for _ in range(200):
        f = ScalarField(_random_spd(rng), center=tuple(rng.uniform(-2, 2, 2)))
        p = tuple(rng.uniform(-5, 5, 2))
        if p != f.center:
            assert f.eval(p) < f.eval(f.center)


def test_closest_obstacle_examples():
    assert closest_obstacle((0.0, 0.0), [Obstacle((2.0, 0.0), 1.0)]) == (0, 1.0)
    idx, dist = closest_obstacle(
        (0.0, 0.0), [Obstacle((2.0, 0.0), 1.0), Obstacle((0.0, 5.0), 1.0)])
    assert (idx, dist) == (0, 1.0)
    idx, dist = closest_obstacle((2.0, 0.0), [Obstacle((2.0, 0.0), 1.0)])
    assert idx == 0
    assert dist == -1.0


def test_closest_obstacle_tie_breaks_low_index():
    obs = [Obstacle((3.0, 0.0), 1.0), Obstacle((-3.0, 0.0), 1.0)]
    assert closest_obstacle((0.0, 0.0), obs)[0] == 0


def test_closest_obstacle_empty_list():
    with pytest.raises(EnvironmentError_):
        closest_obstacle((0.0, 0.0), [])


def test_distance_sign_iff_outside():
    rng = np.random.default_rng(10)
    obs = [Obstacle(tuple(rng.uniform(-3, 3, 2)), rng.uniform(0.2, 1.5))
           for _ in range(4)]
    for _ in range(300):
        p = tuple(rng.uniform(-4, 4, 2))
        _, dist = closest_obstacle(p, obs)
        outside_all = all(
            math.hypot(p[0] - o.center[0], p[1] - o.center[1]) >= o.radius
            for o in obs)
        assert (dist >= 0.0) == outside_all


def test_obstacle_validation():
    with pytest.raises(EnvironmentError_):
        Obstacle((0.0, 0.0), 0.0)
