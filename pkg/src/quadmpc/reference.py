"""Reference trajectory generation from a velocity/yaw command.

The translational reference is a trapezoidal speed profile along the fixed
commanded direction: accelerate at ``a_d`` from rest, then hold ``v_d``.  Yaw
ramps at the commanded rate until the target angle is reached and holds; the
yaw-rate reference is the commanded rate during the ramp and zero after.
Height is held at the nominal stand height, roll/pitch references are zero,
and the two ramps are independent (a turn command does not bend the
translational path).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mpc import N_STATES, mpc_state


@dataclass
class Command:
    """High-level locomotion command.

    ``omega_dot_psi_d`` is carried for completeness but the yaw ramp uses the
    constant rate ``omega_psi_d``.
    """

    v_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a_d: float = 0.5
    psi_d: float = 0.0
    omega_psi_d: float = 0.5
    omega_dot_psi_d: float = 0.0
    z0: float = 0.2

    def __post_init__(self) -> None:
        self.v_d = np.asarray(self.v_d, dtype=float).reshape(3)
        if self.a_d <= 0.0:
            raise ValueError("a_d must be positive")


def reference_point(t: float, cmd: Command) -> np.ndarray:
    """13-dim reference state at time ``t >= 0``."""
    if t < 0.0:
        raise ValueError("reference time must be non-negative")
    speed = float(np.linalg.norm(cmd.v_d))
    p = np.array([0.0, 0.0, cmd.z0])
    v = np.zeros(3)
    if speed > 0.0:
        direction = cmd.v_d / speed
        t_ramp = speed / cmd.a_d
        if t <= t_ramp:
            p = p + 0.5 * cmd.a_d * t * t * direction
            v = cmd.a_d * t * direction
        else:
            # distance = ramp distance + cruise; equals v_d*t - v^2/(2 a_d)
            p = p + (speed * t - 0.5 * speed * speed / cmd.a_d) * direction
            v = cmd.v_d.copy()

    psi = 0.0
    w_psi = 0.0
    if cmd.psi_d != 0.0:
        sgn = 1.0 if cmd.psi_d > 0.0 else -1.0
        rate = abs(cmd.omega_psi_d)
        if rate <= 0.0:
            raise ValueError("omega_psi_d must be non-zero when psi_d is non-zero")
        ramp = sgn * rate * t
        if abs(ramp) < abs(cmd.psi_d):
            psi = ramp
            w_psi = sgn * rate
        else:
            psi = cmd.psi_d

    theta = np.array([0.0, 0.0, psi])
    w = np.array([0.0, 0.0, w_psi])
    return mpc_state(p, v, theta, w)


def reference_window(t: float, n_steps: int, dt: float, cmd: Command) -> np.ndarray:
    """Stacked reference for the prediction steps t + dt, ..., t + N dt."""
    out = np.empty(N_STATES * n_steps)
    for k in range(n_steps):
        out[N_STATES * k : N_STATES * (k + 1)] = reference_point(t + (k + 1) * dt, cmd)
    return out
