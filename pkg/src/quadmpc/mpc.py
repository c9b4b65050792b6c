"""Linear time-varying MPC model over the single rigid body.

The prediction state is the 13-vector

    x = [p (3), v (3), theta (3), w (3), g_s]

with world-frame position, velocity and angular velocity, z-y-x Euler angles
``theta = (roll, pitch, yaw)``, and a constant gravity state ``g_s = 9.81``
appended so the affine gravity term fits a purely linear model.  Linearising
about small roll/pitch and dropping the gyroscopic term gives

    pdot     = v
    vdot     = sum_i f_i / m - g_s * e_z
    thetadot = Rz(yaw)^T @ w
    wdot     = I_w^{-1} * sum_i hat(r_i) @ f_i,   I_w = Rz I_body Rz^T

with ``r_i`` the contact-foot position relative to the COM.  Only feet in
contact contribute control columns, so the input dimension varies along the
horizon with the contact schedule (a step with no contacts is a legal
zero-width drift step).

The horizon is condensed into a dense QP in the stacked force vector U:

    X = A_qp x0 + B_qp U
    J = (X - X_ref)^T Qbar (X - X_ref) + U^T Kbar U
      => H = 2 (B^T Qbar B + Kbar),  G = 2 B^T Qbar (A_qp x0 - X_ref)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .srb import RobotParams, rotation_z

N_STATES = 13
IDX_P = slice(0, 3)
IDX_V = slice(3, 6)
IDX_THETA = slice(6, 9)
IDX_W = slice(9, 12)
IDX_G = 12
GRAVITY_STATE = 9.81


class DimensionMismatchError(ValueError):
    """Model or constraint dimensions are inconsistent."""


class InvalidBoundsError(ValueError):
    """Normal-force bounds do not satisfy 0 <= fz_lb < fz_ub."""


def mpc_state(
    p: np.ndarray,
    v: np.ndarray,
    theta: np.ndarray,
    w: np.ndarray,
    g: float = GRAVITY_STATE,
) -> np.ndarray:
    """Assemble a 13-dim prediction state."""
    x = np.empty(N_STATES)
    x[IDX_P] = p
    x[IDX_V] = v
    x[IDX_THETA] = theta
    x[IDX_W] = w
    x[IDX_G] = g
    return x


@dataclass
class Weights:
    """Diagonal tracking weights per state block plus the force penalty.

    Defaults are the working set used by all bundled scenarios: 1e6 on every
    tracked state axis and 10 on every force component.  The gravity state is
    never weighted.
    """

    q_p: np.ndarray = field(default_factory=lambda: np.full(3, 1e6))
    q_v: np.ndarray = field(default_factory=lambda: np.full(3, 1e6))
    q_theta: np.ndarray = field(default_factory=lambda: np.full(3, 1e6))
    q_w: np.ndarray = field(default_factory=lambda: np.full(3, 1e6))
    k_u: float = 10.0

    def __post_init__(self) -> None:
        for name in ("q_p", "q_v", "q_theta", "q_w"):
            val = np.asarray(getattr(self, name), dtype=float)
            if val.ndim == 0:
                val = np.full(3, float(val))
            if val.shape != (3,) or (val < 0).any():
                raise ValueError(f"{name} must be a non-negative 3-vector")
            setattr(self, name, val)
        if self.k_u <= 0.0:
            raise ValueError("k_u must be positive (keeps the QP strictly convex)")

    def state_diag(self) -> np.ndarray:
        """13-dim diagonal with zero weight on the gravity state."""
        d = np.zeros(N_STATES)
        d[IDX_P] = self.q_p
        d[IDX_V] = self.q_v
        d[IDX_THETA] = self.q_theta
        d[IDX_W] = self.q_w
        return d


@dataclass
class LtvContinuous:
    a_c: np.ndarray
    b_c: np.ndarray
    contact_map: tuple[int, ...]


@dataclass
class LtvDiscrete:
    a_d: np.ndarray
    b_d: np.ndarray
    dt: float
    contact_map: tuple[int, ...]


def continuous_ltv(
    psi: float,
    foot_pos_rel: np.ndarray,
    params: RobotParams,
    contact_map: tuple[int, ...] | None = None,
) -> LtvContinuous:
    """Continuous-time model at yaw ``psi`` with the given contact feet.

    ``foot_pos_rel`` is (n, 3), contact-foot positions relative to the COM in
    world coordinates; n may be zero (ballistic step, no control columns).
    """
    foot_pos_rel = np.asarray(foot_pos_rel, dtype=float).reshape(-1, 3)
    n = foot_pos_rel.shape[0]
    if contact_map is None:
        contact_map = tuple(range(n))
    if len(contact_map) != n:
        raise DimensionMismatchError("contact_map length must match foot count")

    rz = rotation_z(psi)
    a_c = np.zeros((N_STATES, N_STATES))
    a_c[IDX_P, IDX_V] = np.eye(3)
    # small-angle ZYX Euler kinematics: omega_world = Rz(psi) @ Theta_dot,
    # so the Euler-rate rows carry the transpose (identity at psi = 0)
    a_c[IDX_THETA, IDX_W] = rz.T
    a_c[5, IDX_G] = -1.0  # vdot_z picks up -g_s

    i_world = rz @ params.inertia_body @ rz.T
    i_world_inv = np.linalg.inv(i_world)
    b_c = np.zeros((N_STATES, 3 * n))
    for j in range(n):
        cols = slice(3 * j, 3 * j + 3)
        b_c[IDX_V, cols] = np.eye(3) / params.mass
        r = foot_pos_rel[j]
        b_c[IDX_W, cols] = i_world_inv @ np.array(
            [[0.0, -r[2], r[1]], [r[2], 0.0, -r[0]], [-r[1], r[0], 0.0]]
        )
    return LtvContinuous(a_c, b_c, tuple(contact_map))


def discretize_zoh(sys: LtvContinuous, dt: float) -> LtvDiscrete:
    """Exact zero-order-hold discretisation.

    ``a_c`` is nilpotent (a_c @ a_c @ a_c == 0 for any yaw), so the matrix
    exponential series terminates and the ZOH integrals are closed-form:

        Ad = I + Ac dt + Ac^2 dt^2/2
        Bd = (I dt + Ac dt^2/2 + Ac^2 dt^3/6) Bc
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    a, b = sys.a_c, sys.b_c
    a2 = a @ a
    eye = np.eye(N_STATES)
    a_d = eye + a * dt + a2 * (dt * dt / 2.0)
    b_d = (eye * dt + a * (dt * dt / 2.0) + a2 * (dt**3 / 6.0)) @ b
    return LtvDiscrete(a_d, b_d, dt, sys.contact_map)


def condense(
    models: list[LtvDiscrete],
) -> tuple[np.ndarray, np.ndarray, list[tuple[int, int]]]:
    """Stack an LTV horizon into single-shooting prediction matrices.

    Returns ``(A_qp, B_qp, column_offsets)`` such that the stacked prediction
    ``X = [x_1; ...; x_N] = A_qp @ x0 + B_qp @ U`` with ``U`` the per-step
    force vectors concatenated in time order.  ``column_offsets[k]`` is the
    ``(start, width)`` of step k's slice of U; widths vary with the contact
    schedule and may be zero.
    """
    n_steps = len(models)
    if n_steps == 0:
        raise DimensionMismatchError("need at least one model")
    widths = []
    for m in models:
        if m.a_d.shape != (N_STATES, N_STATES):
            raise DimensionMismatchError("a_d must be 13x13")
        if m.b_d.ndim != 2 or m.b_d.shape[0] != N_STATES:
            raise DimensionMismatchError("b_d must have 13 rows")
        widths.append(m.b_d.shape[1])
    offsets: list[tuple[int, int]] = []
    start = 0
    for w in widths:
        offsets.append((start, w))
        start += w
    n_u = start

    a_qp = np.zeros((N_STATES * n_steps, N_STATES))
    b_qp = np.zeros((N_STATES * n_steps, n_u))
    # Row block k is built from row block k-1: prefix-multiply by Ad_k and
    # append the new Bd_k column block.
    prev_a = np.eye(N_STATES)
    for k, m in enumerate(models):
        rows = slice(N_STATES * k, N_STATES * (k + 1))
        prev_a = m.a_d @ prev_a
        a_qp[rows] = prev_a
        if k > 0:
            prev_rows = slice(N_STATES * (k - 1), N_STATES * k)
            upto = offsets[k - 1][0] + offsets[k - 1][1]
            b_qp[rows, :upto] = m.a_d @ b_qp[prev_rows, :upto]
        s, w = offsets[k]
        if w:
            b_qp[rows, s : s + w] = m.b_d
    return a_qp, b_qp, offsets


def condensed_cost(
    a_qp: np.ndarray,
    b_qp: np.ndarray,
    x0: np.ndarray,
    x_ref: np.ndarray,
    q_diag: np.ndarray,
    r_diag: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Dense QP objective for tracking a stacked reference.

    Generic over dimensions: ``q_diag`` weights the stacked predicted state,
    ``r_diag`` the stacked input.  ``H`` is symmetrised exactly.
    """
    err0 = a_qp @ x0 - x_ref
    bq = b_qp.T * q_diag  # == B^T @ diag(q)
    h = 2.0 * (bq @ b_qp + np.diag(r_diag))
    h = 0.5 * (h + h.T)
    g = 2.0 * (bq @ err0)
    return h, g


def build_cost(
    a_qp: np.ndarray,
    b_qp: np.ndarray,
    x0: np.ndarray,
    x_ref: np.ndarray,
    weights: Weights,
) -> tuple[np.ndarray, np.ndarray]:
    """Tracking cost for the 13-state layout with per-block weights."""
    n_rows = a_qp.shape[0]
    if n_rows % N_STATES != 0:
        raise DimensionMismatchError("A_qp rows must be a multiple of 13")
    n_steps = n_rows // N_STATES
    q_diag = np.tile(weights.state_diag(), n_steps)
    r_diag = np.full(b_qp.shape[1], weights.k_u)
    return condensed_cost(a_qp, b_qp, x0, x_ref, q_diag, r_diag)


def friction_pyramid_single(
    mu: float, fz_lb: float, fz_ub: float
) -> tuple[np.ndarray, np.ndarray]:
    """Linearised friction cone plus normal-force bounds for one foot.

    Rows (A f <= b): |f_x| <= mu f_z, |f_y| <= mu f_z, fz_lb <= f_z <= fz_ub.
    """
    if not (0.0 <= fz_lb < fz_ub):
        raise InvalidBoundsError(f"need 0 <= fz_lb < fz_ub, got [{fz_lb}, {fz_ub}]")
    a = np.array(
        [
            [-1.0, 0.0, -mu],
            [1.0, 0.0, -mu],
            [0.0, -1.0, -mu],
            [0.0, 1.0, -mu],
            [0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0],
        ]
    )
    b = np.array([0.0, 0.0, 0.0, 0.0, -fz_lb, fz_ub])
    return a, b


def stack_constraints(
    schedule: np.ndarray, mu: float, fz_lb: float, fz_ub: float
) -> tuple[np.ndarray, np.ndarray]:
    """Block-diagonal friction constraints over an (N, 4) contact schedule.

    One 6x3 block per (step, contact foot) pair, in time-major, leg-index
    order — matching the condensed input vector layout.
    """
    schedule = np.asarray(schedule, dtype=bool)
    a1, b1 = friction_pyramid_single(mu, fz_lb, fz_ub)
    n_feet = int(schedule.sum())
    a = np.zeros((6 * n_feet, 3 * n_feet))
    b = np.empty(6 * n_feet)
    for j in range(n_feet):
        a[6 * j : 6 * j + 6, 3 * j : 3 * j + 3] = a1
        b[6 * j : 6 * j + 6] = b1
    return a, b


@dataclass
class QpProblem:
    """Condensed QP data for one control tick."""

    h: np.ndarray
    g: np.ndarray
    a_ineq: np.ndarray
    b_ineq: np.ndarray
    column_offsets: list[tuple[int, int]]


def assemble_qp(
    x0: np.ndarray,
    x_ref: np.ndarray,
    psi: float,
    schedule: np.ndarray,
    foot_pos_rel: list[np.ndarray],
    params: RobotParams,
    weights: Weights,
    dt: float,
    fz_lb: float,
    fz_ub: float,
) -> QpProblem:
    """Build the per-tick QP from the contact schedule and foot geometry.

    ``schedule`` is the (N, 4) contact table; ``foot_pos_rel[k]`` holds the
    COM-relative positions of exactly the feet in contact at step k, ordered
    by leg index.  Yaw is held at ``psi`` across the horizon, so Ad is shared
    by all steps and only Bd varies.
    """
    schedule = np.asarray(schedule, dtype=bool)
    n_steps = schedule.shape[0]
    if len(foot_pos_rel) != n_steps:
        raise DimensionMismatchError("need one foot-position block per step")
    models = []
    for k in range(n_steps):
        n_k = int(schedule[k].sum())
        feet_k = np.asarray(foot_pos_rel[k], dtype=float).reshape(-1, 3)
        if feet_k.shape[0] != n_k:
            raise DimensionMismatchError(
                f"step {k}: schedule says {n_k} contact feet, got {feet_k.shape[0]} positions"
            )
        sys = continuous_ltv(psi, feet_k, params, tuple(np.flatnonzero(schedule[k])))
        models.append(discretize_zoh(sys, dt))
    a_qp, b_qp, offsets = condense(models)
    h, g = build_cost(a_qp, b_qp, x0, x_ref, weights)
    a_ineq, b_ineq = stack_constraints(schedule, params.mu, fz_lb, fz_ub)
    return QpProblem(h, g, a_ineq, b_ineq, offsets)
