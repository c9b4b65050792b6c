"""Single-rigid-body plant model and integrator.

The robot body is a single rigid mass with inertia; legs are massless and
enter only through the ground reaction forces applied at the foot contact
points.  Conventions used throughout the package:

* world frame is z-up, gravity acts along -z;
* ``R`` maps body coordinates to world coordinates;
* the body angular velocity ``w_body`` is expressed in body coordinates;
* Euler angles are the z-y-x product ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``
  with ``theta = (roll, pitch, yaw)``.

All quantities are SI (m, s, kg, N, rad).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GimbalLockError(ValueError):
    """Euler extraction is singular (|pitch| at pi/2)."""


class NonFiniteError(FloatingPointError):
    """A state update produced NaN or Inf."""


def hat(a: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector, so that ``hat(a) @ b == cross(a, b)``."""
    a = np.asarray(a, dtype=float)
    return np.array(
        [
            [0.0, -a[2], a[1]],
            [a[2], 0.0, -a[0]],
            [-a[1], a[0], 0.0],
        ]
    )


def rotation_z(psi: float) -> np.ndarray:
    """Rotation about the world z axis."""
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_zyx(theta: np.ndarray) -> np.ndarray:
    """Rotation from ``theta = (roll, pitch, yaw)``: ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    roll, pitch, yaw = np.asarray(theta, dtype=float)
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry @ rx


def euler_from_rotation(R: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Extract ``(roll, pitch, yaw)`` from a rotation matrix.

    Raises :class:`GimbalLockError` when ``|pitch|`` is within ``tol`` of pi/2,
    where roll and yaw are no longer separable.
    """
    sp = -R[2, 0]
    if abs(sp) >= 1.0 - tol:
        raise GimbalLockError(f"pitch at {np.arcsin(np.clip(sp, -1, 1)):+.4f} rad is singular")
    pitch = np.arcsin(sp)
    roll = np.arctan2(R[2, 1], R[2, 2])
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])


def project_rotation(R: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar projection via SVD)."""
    u, _, vt = np.linalg.svd(R)
    out = u @ vt
    if np.linalg.det(out) < 0.0:
        out = u @ np.diag([1.0, 1.0, -1.0]) @ vt
    return out


def rotation_defect(R: np.ndarray) -> float:
    """max(|R^T R - I|, |det R - 1|); zero for an exact rotation."""
    ortho = float(np.max(np.abs(R.T @ R - np.eye(3))))
    return max(ortho, abs(float(np.linalg.det(R)) - 1.0))


@dataclass
class RobotParams:
    """Physical parameters of the robot.

    Defaults describe the small quadruped used by the bundled scenarios:
    5.5 kg, body-frame inertia diag(0.026, 0.112, 0.075) kg m^2, 0.3 m x
    0.088 m hip footprint, two 0.14 m leg links, 0.2 m nominal stand height.
    """

    mass: float = 5.5
    inertia_body: np.ndarray = field(
        default_factory=lambda: np.diag([0.026, 0.112, 0.075])
    )
    gravity: float = 9.81
    mu: float = 1.0
    body_length: float = 0.3
    body_width: float = 0.088
    body_height: float = 0.05
    link_length: float = 0.14
    nominal_height: float = 0.2

    def __post_init__(self) -> None:
        self.inertia_body = np.asarray(self.inertia_body, dtype=float)
        if self.inertia_body.shape != (3, 3):
            raise ValueError("inertia_body must be 3x3")
        if self.mass <= 0.0 or self.gravity <= 0.0:
            raise ValueError("mass and gravity must be positive")

    @property
    def weight(self) -> float:
        return self.mass * self.gravity

    def hip_offsets_body(self) -> np.ndarray:
        """Hip positions in body coordinates, rows ordered FL, FR, RL, RR."""
        hl, hw = 0.5 * self.body_length, 0.5 * self.body_width
        return np.array(
            [
                [hl, hw, 0.0],
                [hl, -hw, 0.0],
                [-hl, hw, 0.0],
                [-hl, -hw, 0.0],
            ]
        )


@dataclass
class PlantState:
    """Rigid-body state: position, velocity (world), rotation, body angular rate."""

    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    w_body: np.ndarray

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        self.v = np.asarray(self.v, dtype=float).reshape(3)
        self.R = np.asarray(self.R, dtype=float).reshape(3, 3)
        self.w_body = np.asarray(self.w_body, dtype=float).reshape(3)

    def copy(self) -> "PlantState":
        return PlantState(self.p.copy(), self.v.copy(), self.R.copy(), self.w_body.copy())

    @classmethod
    def standing(cls, params: RobotParams) -> "PlantState":
        return cls(
            p=np.array([0.0, 0.0, params.nominal_height]),
            v=np.zeros(3),
            R=np.eye(3),
            w_body=np.zeros(3),
        )


@dataclass
class FootForces:
    """World-frame ground reaction forces per leg (rows FL, FR, RL, RR).

    Rows whose contact flag is false are zeroed on construction: a swing leg
    can never transmit force to the body.
    """

    f: np.ndarray
    contact: np.ndarray

    def __post_init__(self) -> None:
        self.f = np.asarray(self.f, dtype=float).reshape(4, 3).copy()
        self.contact = np.asarray(self.contact, dtype=bool).reshape(4)
        self.f[~self.contact] = 0.0

    @classmethod
    def zero(cls) -> "FootForces":
        return cls(np.zeros((4, 3)), np.zeros(4, dtype=bool))


def wrench_from_forces(
    forces: FootForces, foot_pos_world: np.ndarray, p: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Net world-frame force and torque about the COM at ``p``.

    Only feet flagged in contact contribute; torque is ``sum((r_i - p) x f_i)``.
    """
    F = np.zeros(3)
    tau = np.zeros(3)
    for i in range(4):
        if forces.contact[i]:
            fi = forces.f[i]
            F += fi
            tau += np.cross(foot_pos_world[i] - p, fi)
    return F, tau


def srb_derivative(
    state: PlantState,
    forces: FootForces,
    foot_pos_world: np.ndarray,
    params: RobotParams,
    ext_force: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Time derivative (pdot, vdot, Rdot, wdot_body) of the rigid body.

    ``ext_force`` is an optional extra world-frame force applied at the COM
    (used for disturbance injection); it adds no torque.
    """
    F, tau_world = wrench_from_forces(forces, foot_pos_world, state.p)
    if ext_force is not None:
        F = F + ext_force
    pdot = state.v
    vdot = F / params.mass
    vdot = vdot - np.array([0.0, 0.0, params.gravity])
    Rdot = state.R @ hat(state.w_body)
    I_b = params.inertia_body
    w = state.w_body
    tau_body = state.R.T @ tau_world
    wdot = np.linalg.solve(I_b, tau_body - np.cross(w, I_b @ w))
    return pdot, vdot, Rdot, wdot


def integrate_step(
    state: PlantState,
    forces: FootForces,
    foot_pos_world: np.ndarray,
    dt: float,
    params: RobotParams,
    ext_force: np.ndarray | None = None,
) -> PlantState:
    """One RK4 step with forces and foot positions held constant (ZOH).

    The rotation is integrated as a raw matrix and projected back onto SO(3)
    afterwards, keeping ``R^T R - I`` at machine precision regardless of step
    count.
    """

    def deriv(p, v, R, w):
        s = PlantState.__new__(PlantState)
        s.p, s.v, s.R, s.w_body = p, v, R, w
        return srb_derivative(s, forces, foot_pos_world, params, ext_force)

    p0, v0, R0, w0 = state.p, state.v, state.R, state.w_body
    k1 = deriv(p0, v0, R0, w0)
    k2 = deriv(
        p0 + 0.5 * dt * k1[0], v0 + 0.5 * dt * k1[1], R0 + 0.5 * dt * k1[2], w0 + 0.5 * dt * k1[3]
    )
    k3 = deriv(
        p0 + 0.5 * dt * k2[0], v0 + 0.5 * dt * k2[1], R0 + 0.5 * dt * k2[2], w0 + 0.5 * dt * k2[3]
    )
    k4 = deriv(p0 + dt * k3[0], v0 + dt * k3[1], R0 + dt * k3[2], w0 + dt * k3[3])

    sixth = dt / 6.0
    p = p0 + sixth * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    v = v0 + sixth * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    R = R0 + sixth * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    w = w0 + sixth * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])

    R = project_rotation(R)
    if not (
        np.isfinite(p).all() and np.isfinite(v).all() and np.isfinite(R).all() and np.isfinite(w).all()
    ):
        raise NonFiniteError("non-finite state after integration step")
    return PlantState(p, v, R, w)
