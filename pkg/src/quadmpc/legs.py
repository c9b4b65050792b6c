"""Leg kinematics: footstep placement, swing trajectories, a 3-DOF leg chain.

Each leg is hip abduction about the body x axis followed by a planar
two-link chain (hip pitch, knee) in the leg's sagittal plane.  With all
joint angles zero the leg points straight down; positive hip pitch swings
the foot forward (+x).  Joint vector order is ``(abduction, hip, knee)`` and
foot positions here are relative to the hip.

The simulator drives swing feet kinematically along the swing trajectory and
pins stance feet, so the chain itself (FK/IK/Jacobian and the torque maps)
is exercised by tests and by downstream users, not by the closed loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .srb import RobotParams


class UnreachableError(ValueError):
    """Foot target outside the leg workspace."""


class PhaseOutOfRangeError(ValueError):
    """Swing phase outside [0, 1]."""


@dataclass
class LegGeometry:
    l1: float = 0.14
    l2: float = 0.14

    @classmethod
    def from_robot(cls, params: RobotParams) -> "LegGeometry":
        return cls(params.link_length, params.link_length)


def raibert_footstep(
    hip_world: np.ndarray,
    v_cur: np.ndarray,
    v_ref: np.ndarray,
    t_stance: float,
    height: float,
    gravity: float = 9.81,
) -> np.ndarray:
    """Touchdown target on the ground plane.

    Half-stance symmetry term plus a velocity-error correction with gain
    sqrt(height / g); the result is projected onto z = 0.
    """
    v_cur = np.asarray(v_cur, dtype=float)
    v_ref = np.asarray(v_ref, dtype=float)
    k = np.sqrt(height / gravity)
    target = np.asarray(hip_world, dtype=float) + 0.5 * t_stance * v_cur + k * (v_cur - v_ref)
    target[2] = 0.0
    return target


# clears flat ground comfortably at the 0.2 m stand height
DEFAULT_APEX_HEIGHT = 0.08


@dataclass
class SwingPlan:
    """Endpoint data for one swing: lift-off point, touchdown point, apex lift."""

    p_start: np.ndarray
    p_end: np.ndarray
    apex_height: float
    duration: float

    def __post_init__(self) -> None:
        self.p_start = np.asarray(self.p_start, dtype=float).reshape(3)
        self.p_end = np.asarray(self.p_end, dtype=float).reshape(3)
        if self.duration <= 0.0:
            raise ValueError("swing duration must be positive")


def _hermite01(s: float) -> tuple[float, float]:
    """Smoothstep 3s^2 - 2s^3 and its derivative (zero slope at both ends)."""
    return s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s)


def swing_trajectory(plan: SwingPlan, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Foot position and velocity at swing phase ``s`` in [0, 1].

    x/y interpolate start to end with a cubic Hermite (zero endpoint
    velocity).  z rises from the start height to ``apex_height`` above it at
    s = 0.5 and returns to the end height with a second Hermite segment; the
    two segments share zero slope at the apex, so the path is C1 throughout.
    Velocity is the phase derivative divided by the swing duration.
    """
    if not (0.0 <= s <= 1.0):
        raise PhaseOutOfRangeError(f"swing phase {s} outside [0, 1]")
    h, dh = _hermite01(s)
    pos = plan.p_start + h * (plan.p_end - plan.p_start)
    vel = dh * (plan.p_end - plan.p_start) / plan.duration

    z0, z1 = plan.p_start[2], plan.p_end[2]
    if s <= 0.5:
        hz, dhz = _hermite01(2.0 * s)
        z = z0 + hz * plan.apex_height
        dz = 2.0 * dhz * plan.apex_height
    else:
        hz, dhz = _hermite01(2.0 * s - 1.0)
        apex = z0 + plan.apex_height
        z = apex + hz * (z1 - apex)
        dz = 2.0 * dhz * (z1 - apex)
    pos[2] = z
    vel[2] = dz / plan.duration
    return pos, vel


def leg_fk(q: np.ndarray, geom: LegGeometry) -> np.ndarray:
    """Foot position relative to the hip for joints ``(abduction, hip, knee)``."""
    qa, qh, qk = np.asarray(q, dtype=float)
    x = geom.l1 * np.sin(qh) + geom.l2 * np.sin(qh + qk)
    zp = -geom.l1 * np.cos(qh) - geom.l2 * np.cos(qh + qk)
    # abduction rotates the sagittal plane about the x axis
    return np.array([x, -np.sin(qa) * zp, np.cos(qa) * zp])


def leg_ik(foot_hip: np.ndarray, geom: LegGeometry) -> np.ndarray:
    """Joint angles reaching ``foot_hip``, knee-back branch (knee angle in (-pi, 0)).

    Raises :class:`UnreachableError` outside the annulus
    ``|l1 - l2| < r < l1 + l2`` (with a 1e-9 margin at both ends).
    """
    x, y, z = np.asarray(foot_hip, dtype=float)
    r = float(np.sqrt(x * x + y * y + z * z))
    lo, hi = abs(geom.l1 - geom.l2), geom.l1 + geom.l2
    if r <= lo + 1e-9 or r >= hi - 1e-9:
        raise UnreachableError(f"target radius {r:.6f} outside ({lo:.6f}, {hi:.6f})")

    qa = np.arctan2(y, -z)
    zp = -float(np.hypot(y, z))  # sagittal-plane vertical coordinate (foot below hip)

    # planar 2R in (x, -zp): standard elbow solution, knee-back branch
    c_knee = (r * r - geom.l1**2 - geom.l2**2) / (2.0 * geom.l1 * geom.l2)
    c_knee = float(np.clip(c_knee, -1.0, 1.0))
    qk = -np.arccos(c_knee)
    gamma = np.arctan2(x, -zp)  # direction of the foot, measured from straight down
    beta = np.arctan2(geom.l2 * np.sin(-qk), geom.l1 + geom.l2 * np.cos(-qk))
    qh = gamma + beta
    return np.array([qa, qh, qk])


def leg_jacobian(q: np.ndarray, geom: LegGeometry) -> np.ndarray:
    """Analytic 3x3 Jacobian d(foot)/d(q) of :func:`leg_fk`."""
    qa, qh, qk = np.asarray(q, dtype=float)
    s1, c1 = np.sin(qh), np.cos(qh)
    s12, c12 = np.sin(qh + qk), np.cos(qh + qk)
    x = geom.l1 * s1 + geom.l2 * s12
    zp = -geom.l1 * c1 - geom.l2 * c12
    dx_dh = geom.l1 * c1 + geom.l2 * c12
    dx_dk = geom.l2 * c12
    dzp_dh = geom.l1 * s1 + geom.l2 * s12  # == x
    dzp_dk = geom.l2 * s12
    sa, ca = np.sin(qa), np.cos(qa)
    return np.array(
        [
            [0.0, dx_dh, dx_dk],
            [-ca * zp, -sa * dzp_dh, -sa * dzp_dk],
            [-sa * zp, ca * dzp_dh, ca * dzp_dk],
        ]
    )


def stance_torques(jac: np.ndarray, R: np.ndarray, f_world: np.ndarray) -> np.ndarray:
    """Joint torques realising a world-frame ground reaction force.

    The leg pushes against the ground with ``-f`` while the ground pushes the
    body with ``f``; mapping through the body rotation and the leg Jacobian
    gives ``tau = J^T R^T f``.
    """
    return jac.T @ (np.asarray(R, dtype=float).T @ np.asarray(f_world, dtype=float))


def swing_pd_torque(
    q: np.ndarray,
    qdot: np.ndarray,
    q_ref: np.ndarray,
    qdot_ref: np.ndarray,
    kp: float = 300.0,
    kd: float = 0.1,
) -> np.ndarray:
    """Joint-space PD law for swing-leg tracking."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    return kp * (np.asarray(q_ref, dtype=float) - q) + kd * (np.asarray(qdot_ref, dtype=float) - qdot)
