"""Reference shaping: trapezoidal speed profile, yaw ramp-to-hold."""

import numpy as np
import pytest

from quadmpc.mpc import IDX_G, IDX_P, IDX_THETA, IDX_V, IDX_W, N_STATES
from quadmpc.reference import Command, reference_point, reference_window


def trapezoid_oracle(t, v_d, a_d):
    """Independent closed form: distance and speed along the command direction."""
    speed = np.linalg.norm(v_d)
    if speed == 0.0:
        return np.zeros(3), np.zeros(3)
    u = v_d / speed
    t_ramp = speed / a_d
    if t <= t_ramp:
        return 0.5 * a_d * t**2 * u, a_d * t * u
    dist = 0.5 * a_d * t_ramp**2 + speed * (t - t_ramp)
    return dist * u, v_d.copy()


def test_trapezoid_against_oracle():
    cmd = Command(v_d=np.array([0.5, -0.2, 0.0]), a_d=0.7, z0=0.23)
    for t in (0.0, 0.13, 0.5, 0.7694, 1.0, 2.5, 7.0):
        x = reference_point(t, cmd)
        d, v = trapezoid_oracle(t, cmd.v_d, cmd.a_d)
        assert np.allclose(x[IDX_P], d + [0, 0, 0.23], atol=1e-12)
        assert np.allclose(x[IDX_V], v, atol=1e-12)


def test_cruise_velocity_is_exact():
    cmd = Command(v_d=np.array([1.0, 0.0, 0.0]), a_d=0.5)
    x = reference_point(3.0, cmd)  # ramp ends at t = 2
    assert np.array_equal(x[IDX_V], cmd.v_d)


def test_zero_command_holds_stand_pose():
    cmd = Command()
    for t in (0.0, 1.0, 10.0):
        x = reference_point(t, cmd)
        assert np.allclose(x[IDX_P], [0, 0, 0.2], atol=1e-15)
        assert np.allclose(x[IDX_V], 0.0)
        assert np.allclose(x[IDX_THETA], 0.0)
        assert np.allclose(x[IDX_W], 0.0)
        assert x[IDX_G] == pytest.approx(9.81)


def test_yaw_ramp_then_hold():
    cmd = Command(psi_d=np.pi / 4, omega_psi_d=0.5)
    t_ramp = (np.pi / 4) / 0.5
    mid = reference_point(0.5 * t_ramp, cmd)
    assert mid[8] == pytest.approx(0.25 * np.pi / 4 * 2)  # 0.5 * rate * t
    assert mid[11] == pytest.approx(0.5)
    done = reference_point(t_ramp + 1.0, cmd)
    assert done[8] == pytest.approx(np.pi / 4)
    assert done[11] == 0.0


def test_negative_yaw_command():
    cmd = Command(psi_d=-1.0, omega_psi_d=0.5)
    x = reference_point(1.0, cmd)
    assert x[8] == pytest.approx(-0.5)
    assert x[11] == pytest.approx(-0.5)
    assert reference_point(10.0, cmd)[8] == pytest.approx(-1.0)


def test_yaw_and_translation_ramps_are_independent():
    straight = Command(v_d=np.array([0.35, 0.0, 0.0]))
    turning = Command(v_d=np.array([0.35, 0.0, 0.0]), psi_d=np.pi / 4)
    for t in (0.3, 1.1, 2.9):
        a = reference_point(t, straight)
        b = reference_point(t, turning)
        assert np.array_equal(a[IDX_P], b[IDX_P])
        assert np.array_equal(a[IDX_V], b[IDX_V])


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        reference_point(-0.001, Command())


def test_yaw_target_without_rate_rejected():
    with pytest.raises(ValueError):
        reference_point(1.0, Command(psi_d=0.5, omega_psi_d=0.0))


def test_non_positive_acceleration_rejected():
    with pytest.raises(ValueError):
        Command(a_d=0.0)


def test_window_stacks_future_samples():
    cmd = Command(v_d=np.array([0.5, 0, 0]), psi_d=0.3)
    win = reference_window(1.0, 4, 0.02, cmd)
    assert win.shape == (4 * N_STATES,)
    for k in range(4):
        expect = reference_point(1.0 + (k + 1) * 0.02, cmd)
        assert np.array_equal(win[N_STATES * k : N_STATES * (k + 1)], expect)
