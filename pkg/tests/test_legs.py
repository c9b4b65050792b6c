"""Leg kinematics, footstep heuristic, swing trajectories, torque mapping."""

import numpy as np
import pytest

from quadmpc.legs import (
    DEFAULT_APEX_HEIGHT,
    LegGeometry,
    PhaseOutOfRangeError,
    SwingPlan,
    UnreachableError,
    leg_fk,
    leg_ik,
    leg_jacobian,
    raibert_footstep,
    stance_torques,
    swing_pd_torque,
    swing_trajectory,
)
from quadmpc.srb import rotation_zyx

GEOM = LegGeometry()


def sample_canonical_joints(rng, n):
    """Joint triples on the IK's branch: foot below hip, knee folded back.

    "Below hip" means the signed sagittal coordinate -(l1 cos qh + l2 cos(qh+qk))
    is negative; a foot above that plane has a mirror solution with the
    abduction flipped by pi, which the IK (correctly) prefers.
    """
    out = []
    while len(out) < n:
        q = np.array([
            rng.uniform(-1.2, 1.2),
            rng.uniform(-1.2, 1.2),
            rng.uniform(-2.4, -0.35),
        ])
        zp = -(GEOM.l1 * np.cos(q[1]) + GEOM.l2 * np.cos(q[1] + q[2]))
        foot = leg_fk(q, GEOM)
        r = np.linalg.norm(foot)
        if zp < -0.02 and 0.02 < r < GEOM.l1 + GEOM.l2 - 0.005:
            out.append(q)
    return out


def test_fk_known_pose():
    # hip swung back a quarter turn, knee at a right angle, no abduction:
    # foot sits one link back and one link down from the hip
    foot = leg_fk([0.0, 0.0, -np.pi / 2], GEOM)
    assert np.allclose(foot, [-GEOM.l2, 0.0, -GEOM.l1], atol=1e-15)


def test_fk_abduction_rotates_about_x():
    q = [0.6, 0.3, -1.1]
    foot = leg_fk(q, GEOM)
    flat = leg_fk([0.0, q[1], q[2]], GEOM)
    rx = rotation_zyx([0.0, 0.0, 0.0])  # identity; build the x-rotation by hand
    ca, sa = np.cos(q[0]), np.sin(q[0])
    rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    assert np.allclose(foot, rx @ flat, atol=1e-14)


def test_ik_fk_joint_round_trip():
    rng = np.random.default_rng(4)
    for q in sample_canonical_joints(rng, 300):
        q_back = leg_ik(leg_fk(q, GEOM), GEOM)
        assert np.allclose(q_back, q, atol=1e-9)


def test_fk_ik_position_round_trip():
    rng = np.random.default_rng(5)
    for q in sample_canonical_joints(rng, 300):
        foot = leg_fk(q, GEOM)
        assert np.allclose(leg_fk(leg_ik(foot, GEOM), GEOM), foot, atol=1e-9)


def test_ik_unreachable():
    with pytest.raises(UnreachableError):
        leg_ik([0.0, 0.0, -0.3], GEOM)  # beyond l1 + l2 = 0.28
    with pytest.raises(UnreachableError):
        leg_ik([0.0, 0.0, 0.0], GEOM)  # inner boundary (l1 == l2)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(6)
    h = 1e-6
    for q in sample_canonical_joints(rng, 100):
        jac = leg_jacobian(q, GEOM)
        fd = np.empty((3, 3))
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = h
            fd[:, j] = (leg_fk(q + dq, GEOM) - leg_fk(q - dq, GEOM)) / (2 * h)
        assert np.abs(jac - fd).max() < 1e-6


def test_raibert_neutral_point_under_hip():
    hip = np.array([0.3, 0.1, 0.2])
    target = raibert_footstep(hip, np.zeros(3), np.zeros(3), 0.1, 0.2)
    assert np.allclose(target, [0.3, 0.1, 0.0], atol=1e-15)


def test_raibert_velocity_terms():
    hip = np.array([0.0, 0.0, 0.2])
    v = np.array([0.6, 0.0, 0.0])
    t_st, z0, g = 0.1, 0.2, 9.81
    # at v == v_ref only the half-stance symmetry term remains
    tracking = raibert_footstep(hip, v, v, t_st, z0, g)
    assert tracking[0] == pytest.approx(0.5 * t_st * 0.6)
    # a velocity error adds sqrt(z0/g) * (v - v_ref)
    overspeed = raibert_footstep(hip, v, np.zeros(3), t_st, z0, g)
    assert overspeed[0] == pytest.approx(0.5 * t_st * 0.6 + np.sqrt(z0 / g) * 0.6)
    assert overspeed[2] == 0.0


def test_swing_trajectory_endpoints_and_apex():
    plan = SwingPlan(
        p_start=np.array([0.0, 0.1, 0.0]),
        p_end=np.array([0.2, 0.1, 0.0]),
        apex_height=DEFAULT_APEX_HEIGHT,
        duration=0.18,
    )
    p0, v0 = swing_trajectory(plan, 0.0)
    p1, v1 = swing_trajectory(plan, 1.0)
    assert np.allclose(p0, plan.p_start, atol=1e-15)
    assert np.allclose(p1, plan.p_end, atol=1e-15)
    # smoothstep interpolation: zero velocity at both ends
    assert np.allclose(v0, 0.0, atol=1e-12)
    assert np.allclose(v1, 0.0, atol=1e-12)
    mid, vmid = swing_trajectory(plan, 0.5)
    assert mid[2] == pytest.approx(DEFAULT_APEX_HEIGHT)
    assert vmid[2] == pytest.approx(0.0, abs=1e-12)  # apex is the z-turnaround
    assert mid[0] == pytest.approx(0.1)  # halfway along the ground track


def test_swing_trajectory_clears_start_height():
    plan = SwingPlan([0, 0, 0], [0.15, 0, 0.02], 0.08, 0.2)
    zs = [swing_trajectory(plan, s)[0][2] for s in np.linspace(0, 1, 41)]
    assert max(zs) == pytest.approx(0.08)
    assert min(zs) >= -1e-12


def test_swing_phase_bounds():
    plan = SwingPlan([0, 0, 0], [0.1, 0, 0], 0.05, 0.1)
    with pytest.raises(PhaseOutOfRangeError):
        swing_trajectory(plan, -0.01)
    with pytest.raises(PhaseOutOfRangeError):
        swing_trajectory(plan, 1.01)


def test_swing_plan_duration_validation():
    with pytest.raises(ValueError):
        SwingPlan([0, 0, 0], [1, 0, 0], 0.05, 0.0)


def test_stance_torques_mapping():
    """tau = J^T R^T f: virtual work balance for a body-attached leg."""
    rng = np.random.default_rng(7)
    q = np.array([0.2, 0.4, -1.3])
    jac = leg_jacobian(q, GEOM)
    r = rotation_zyx([0.1, -0.2, 0.8])
    f = rng.standard_normal(3)
    tau = stance_torques(jac, r, f)
    assert np.allclose(tau, jac.T @ r.T @ f, atol=1e-14)


def test_swing_pd_zero_error_zero_torque():
    q = np.array([0.1, 0.2, -1.0])
    qd = np.array([0.5, -0.5, 0.2])
    assert np.allclose(swing_pd_torque(q, qd, q, qd), 0.0)


def test_swing_pd_gains():
    tau = swing_pd_torque(np.zeros(3), np.zeros(3), np.array([0.01, 0, 0]),
                          np.array([0, 0.5, 0]), kp=300.0, kd=0.1)
    assert tau[0] == pytest.approx(3.0)
    assert tau[1] == pytest.approx(0.05)
