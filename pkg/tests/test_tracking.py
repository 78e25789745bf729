import numpy as np
import pytest
from scipy.linalg import solve_discrete_are

from loopflow._utils.exception import NonConvergent
from loopflow.tracking import (
    Disturbance,
    ReferenceTrajectory,
    RobotState,
    TrajectorySample,
    axis_model,
    control_step,
    derive_gains,
    interpolate,
    step_plant,
)


def _sample(p=(0.0, 0.0, 0.0), v=(0.0, 0.0, 0.0), a=(0.0, 0.0, 0.0)):
    return TrajectorySample(0.0, np.array(p, dtype=float), np.array(v, dtype=float), np.array(a, dtype=float))


# ------------------------------------------------------------
# Test 1: reference interpolation
# ------------------------------------------------------------
def test_colinear_waypoints_give_constant_velocity():
    path = [[0.0, 0.0, 1.0], [0.5, 0.0, 1.0], [1.0, 0.0, 1.0]]
    mid = interpolate(path, 1.0, 1.0)
    np.testing.assert_allclose(mid.p, [0.5, 0.0, 1.0])
    np.testing.assert_allclose(mid.v, [0.5, 0.0, 0.0])
    np.testing.assert_allclose(mid.a, 0.0, atol=1e-12)


def test_single_waypoint_holds():
    ref = ReferenceTrajectory([[1.0, 2.0, 1.0]], 0.5)
    for t in (0.0, 0.3, 10.0):
        s = ref.sample(t)
        np.testing.assert_array_equal(s.p, [1.0, 2.0, 1.0])
        np.testing.assert_array_equal(s.v, 0.0)
        np.testing.assert_array_equal(s.a, 0.0)


def test_corner_acceleration_is_second_difference():
    path = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]
    s = interpolate(path, 1.0, 1.5)
    assert np.linalg.norm(s.a) == pytest.approx(np.sqrt(2.0))
    np.testing.assert_allclose(s.a / np.linalg.norm(s.a), np.array([-1.0, 1.0, 0.0]) / np.sqrt(2.0))
    # On the quadratic through the three waypoints.
    np.testing.assert_allclose(s.p, [1.125, 0.375, 0.0])


def test_two_point_path_is_linear():
    ref = ReferenceTrajectory([[0.0, 0.0, 1.0], [0.5, 0.0, 1.0]], 0.5)
    s = ref.sample(0.25)
    np.testing.assert_allclose(s.p, [0.25, 0.0, 1.0])
    np.testing.assert_allclose(s.v, [1.0, 0.0, 0.0])


def test_anchor_and_hold_past_the_end():
    path = [[0.0, 0.0, 1.0], [0.5, 0.0, 1.0], [1.0, 0.0, 1.0]]
    ref = ReferenceTrajectory(path, 1.0, t_anchor=2.0)
    assert ref.t_end == pytest.approx(4.0)
    np.testing.assert_allclose(ref.sample(1.0).p, path[0])
    end = ref.sample(7.0)
    np.testing.assert_allclose(end.p, path[-1])
    np.testing.assert_array_equal(end.v, 0.0)
    np.testing.assert_array_equal(end.a, 0.0)


def test_reference_rejects_bad_input():
    with pytest.raises(ValueError):
        ReferenceTrajectory(np.empty((0, 3)), 1.0)
    with pytest.raises(ValueError):
        ReferenceTrajectory([[0.0, 0.0, 0.0]], 0.0)


# ------------------------------------------------------------
# Test 2: LQ gains
# ------------------------------------------------------------
@pytest.mark.parametrize("q_pos,q_vel,r_acc", [(1.0, 1.0, 1.0), (8.0, 4.0, 1.0)])
def test_gains_match_scipy_dare(q_pos, q_vel, r_acc):
    dt = 0.01
    gains = derive_gains(q_pos, q_vel, r_acc, dt=dt)
    A, B = axis_model(dt)
    P = solve_discrete_are(A, B, np.diag([q_pos, q_vel]), np.array([[r_acc]]))
    K = np.linalg.solve(r_acc + B.T @ P @ B, B.T @ P @ A)
    np.testing.assert_allclose(gains.P, P, rtol=1e-6)
    np.testing.assert_allclose(gains.k_axis, K, rtol=1e-6)
    assert gains.spectral_radius() < 1.0
    assert gains.K_fb.shape == (3, 6)


def test_expensive_control_lowers_position_gain():
    cheap = derive_gains(1.0, 1.0, 1.0, dt=0.05)
    costly = derive_gains(1.0, 1.0, 100.0, dt=0.05)
    assert costly.k_axis[0, 0] < cheap.k_axis[0, 0]


def test_gains_raise_when_iteration_is_capped():
    with pytest.raises(NonConvergent) as info:
        derive_gains(dt=0.01, max_iter=1)
    assert info.value.residual > 0.0


def test_gains_reject_bad_weights():
    with pytest.raises(ValueError):
        derive_gains(q_pos=0.0)
    with pytest.raises(ValueError):
        derive_gains(dt=-1.0)


# ------------------------------------------------------------
# Test 3: control law
# ------------------------------------------------------------
def test_control_is_zero_on_reference():
    gains = derive_gains()
    u = control_step(RobotState.at_rest([0.0, 0.0, 1.0]), _sample(p=(0.0, 0.0, 1.0)), gains)
    np.testing.assert_array_equal(u, 0.0)


def test_control_passes_feedforward():
    gains = derive_gains()
    u = control_step(RobotState.at_rest([0.0, 0.0, 1.0]), _sample(p=(0.0, 0.0, 1.0), a=(1.0, 0.0, 0.0)), gains)
    np.testing.assert_allclose(u, [1.0, 0.0, 0.0])


def test_control_saturates_per_axis():
    gains = derive_gains()
    u = control_step(RobotState.at_rest([100.0, -100.0, 1.0]), _sample(p=(0.0, 0.0, 1.0)), gains, a_max=6.0)
    np.testing.assert_allclose(u, [-6.0, 6.0, 0.0])


# ------------------------------------------------------------
# Test 4: plant
# ------------------------------------------------------------
def test_plant_from_rest():
    s = step_plant(RobotState.at_rest([0.0, 0.0, 0.0]), [1.0, 0.0, 0.0], 1.0)
    np.testing.assert_allclose(s.p, [0.5, 0.0, 0.0])
    np.testing.assert_allclose(s.v, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(s.a, [1.0, 0.0, 0.0])


def test_plant_discretization_is_exact():
    u = np.array([0.3, -0.2, 0.1])
    start = RobotState(np.array([0.0, 1.0, 1.0]), v=np.array([0.1, 0.0, -0.1]))
    fine = start
    for _ in range(1000):
        fine = step_plant(fine, u, 0.001)
    coarse = step_plant(start, u, 1.0)
    np.testing.assert_allclose(fine.p, coarse.p, atol=1e-9)
    np.testing.assert_allclose(fine.v, coarse.v, atol=1e-9)


def test_disturbance_is_truncated(rng):
    noise = Disturbance(0.5, rng, clip=2.0, planar=True)
    draws = np.array([noise.sample() for _ in range(2000)])
    assert np.all(np.abs(draws) <= 1.0 + 1e-12)
    np.testing.assert_array_equal(draws[:, 2], 0.0)
    assert np.all(Disturbance(0.0, rng).sample() == 0.0)


def test_robot_state_validates_and_wraps_yaw():
    with pytest.raises(ValueError):
        RobotState(np.array([np.nan, 0.0, 0.0]))
    assert RobotState.at_rest([0.0, 0.0, 0.0]).as_vector().shape == (10,)
    assert RobotState(np.zeros(3), yaw=2.5 * np.pi).yaw == pytest.approx(0.5 * np.pi)


# ------------------------------------------------------------
# Test 5: closed-loop tracking
# ------------------------------------------------------------
def _curving_path(rng, steps=12, step=0.5):
    heading = rng.uniform(0.0, 2.0 * np.pi)
    turn = rng.uniform(-0.2, 0.2)
    p = np.array([rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 1.0])
    path = [p]
    for _ in range(steps):
        heading += turn
        p = p + step * np.array([np.cos(heading), np.sin(heading), 0.0])
        path.append(p)
    return np.array(path)


def test_five_robots_track_under_disturbance(rng):
    dt = 0.01
    gains = derive_gains(8.0, 4.0, 1.0, dt=dt)
    noise = Disturbance(0.5, rng, clip=3.0)
    worst = 0.0
    for _ in range(5):
        ref = ReferenceTrajectory(_curving_path(rng), 1.0)
        start = ref.sample(0.0)
        state = RobotState(start.p.copy(), v=start.v.copy())
        for tick in range(int(round(ref.t_end / dt))):
            s = ref.sample(tick * dt)
            worst = max(worst, float(np.linalg.norm(state.p - s.p)))
            state = step_plant(state, control_step(state, s, gains), dt, noise)
    assert worst <= 0.15


def test_reference_is_continuous_across_segments(rng):
    for _ in range(50):
        T = int(rng.integers(1, 12))
        path = np.cumsum(np.vstack([rng.uniform(-1.0, 1.0, 3), rng.uniform(-0.3, 0.3, (T, 3))]), axis=0)
        dt_step = rng.uniform(0.2, 2.0)
        ref = ReferenceTrajectory(path, dt_step, t_anchor=rng.uniform(0.0, 3.0))
        for k in range(T + 1):
            t = ref.t_anchor + k * dt_step
            np.testing.assert_allclose(ref.sample(t).p, path[k], atol=1e-9)
            jump = np.linalg.norm(ref.sample(t + 1e-7).p - ref.sample(t - 1e-7).p)
            assert jump < 1e-5
        for t in rng.uniform(ref.t_anchor, ref.t_end, 20):
            assert np.all(np.isfinite(ref.sample(t).p))
