"""Closed-loop simulation: 1 kHz rigid-body plant under the 50 Hz force MPC.

The harness owns the glue the library modules deliberately avoid: the gait
clock, swing-foot kinematics and touchdown pinning, disturbance injection,
warm starts between ticks, and per-step logging.  Every run starts from a
standing pose; scenarios with a positive ``settle`` time regulate a full
stance before the gait engages, which doubles as the static-stand scenario
when ``settle`` covers the whole run.

Determinism: a given :class:`ScenarioConfig` produces bit-identical state and
force logs.  The only nondeterministic log channel is the QP wall time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .gait import (
    FsmState,
    GaitParams,
    LegMode,
    advance,
    contact_state,
    gait_table,
    predict_contacts,
)
from .legs import DEFAULT_APEX_HEIGHT, SwingPlan, raibert_footstep, swing_trajectory
from .mpc import Weights, assemble_qp, mpc_state
from .qp import QpStatus, kkt_residuals, solve
from .reference import Command, reference_point, reference_window
from .srb import (
    FootForces,
    PlantState,
    RobotParams,
    euler_from_rotation,
    integrate_step,
    rotation_z,
)

# integer codes used in logs and CSV output
QP_STATUS_CODES = {
    QpStatus.OPTIMAL: 0,
    QpStatus.MAX_ITERATIONS: 1,
    QpStatus.INFEASIBLE: 2,
    QpStatus.NONCONVEX: 3,
}

FALL_HEIGHT = 0.02  # m; below this the body has effectively hit the ground
FALL_TILT = 1.0  # rad; |roll| or |pitch| beyond this counts as a fall
TOUCHDOWN_EXTRAP = 1.0  # fraction of the swing the hip is carried forward


class SimDivergedError(RuntimeError):
    """Raised when the body falls or tips over; carries the partial log."""

    def __init__(self, log: "SimLog", t: float, reason: str):
        super().__init__(f"simulation diverged at t = {t:.3f} s: {reason}")
        self.log = log
        self.t = t
        self.reason = reason


@dataclass(frozen=True)
class DisturbanceSpec:
    """External COM force pulse, a cubic Bezier bump in time.

    ``peak`` is the realized maximum of the force curve (reached at the
    window midpoint); the underlying Bezier control points are scaled by 4/3
    so the curve actually attains it.
    """

    onset: float
    peak: np.ndarray
    window: float = 0.4

    def __post_init__(self) -> None:
        object.__setattr__(self, "peak", np.asarray(self.peak, dtype=float).reshape(3))
        if self.window <= 0.0:
            raise ValueError("disturbance window must be positive")


def bezier_force(t: float, spec: DisturbanceSpec) -> np.ndarray:
    """Disturbance force at time ``t``; zero outside the pulse window.

    Cubic Bezier with control points (0, c, c, 0) collapses to
    3 u (1 - u) c; with c = 4/3 peak the curve maximum equals ``peak``.
    """
    u = (t - spec.onset) / spec.window
    if u <= 0.0 or u >= 1.0:
        return np.zeros(3)
    return 4.0 * u * (1.0 - u) * spec.peak


@dataclass
class ScenarioConfig:
    """Everything a closed-loop run needs; defaults describe the 0.5 m/s trot."""

    robot: RobotParams = field(default_factory=RobotParams)
    gait: str = "trot"
    command: Command = field(default_factory=lambda: Command(v_d=np.array([0.5, 0.0, 0.0])))
    weights: Weights = field(default_factory=Weights)
    horizon: int = 15
    dt_mpc: float = 0.02
    dt_sim: float = 0.001
    duration: float = 5.0
    settle: float = 0.3
    fz_lb: float = 0.0
    fz_ub: float | None = None  # None = twice the robot's weight
    disturbances: list[DisturbanceSpec] = field(default_factory=list)
    output: str = "out"

    def force_bounds(self) -> tuple[float, float]:
        ub = 2.0 * self.robot.weight if self.fz_ub is None else self.fz_ub
        return self.fz_lb, ub

    def validate(self) -> None:
        gait_table(self.gait)  # raises UnknownGaitError
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if self.dt_sim <= 0.0 or self.dt_mpc <= 0.0:
            raise ValueError("time steps must be positive")
        ratio = self.dt_mpc / self.dt_sim
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("dt_mpc must be an integer multiple of dt_sim")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.settle < 0.0:
            raise ValueError("settle must be non-negative")
        lb, ub = self.force_bounds()
        if not 0.0 <= lb < ub:
            raise ValueError("force bounds must satisfy 0 <= fz_lb < fz_ub")
        if self.command.z0 <= 0.0:
            raise ValueError("command height z0 must be positive")


@dataclass
class TickInfo:
    """Diagnostics from one control tick."""

    t: float
    status: QpStatus
    iterations: int
    qp_ms: float
    kkt: tuple[float, float, float, float]
    n_u: int
    failed: bool


@dataclass
class SimLog:
    """Per-plant-step time series plus per-tick QP diagnostics.

    Angular velocity is logged in the world frame (the MPC's convention).
    ``qp_status`` / ``qp_ms`` carry the most recent tick's result forward
    between ticks so every row has a value.
    """

    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    w_world: np.ndarray
    contacts: np.ndarray
    forces: np.ndarray
    x_ref: np.ndarray
    qp_status: np.ndarray
    qp_ms: np.ndarray
    tick_t: np.ndarray
    tick_ms: np.ndarray
    tick_iterations: np.ndarray
    tick_status: np.ndarray
    tick_kkt: np.ndarray
    qp_failures: int
    diverged: bool = False
    reason: str = ""

    @property
    def n_rows(self) -> int:
        return self.t.shape[0]


def _row_starts(schedule: np.ndarray) -> dict[tuple[int, int], int]:
    """Constraint-row start per (step, leg) block: 6 rows per contact foot."""
    table: dict[tuple[int, int], int] = {}
    row = 0
    for k in range(schedule.shape[0]):
        for leg in range(4):
            if schedule[k, leg]:
                table[(k, leg)] = row
                row += 6
    return table


def _shift_active_set(
    active: np.ndarray, old_schedule: np.ndarray, new_schedule: np.ndarray
) -> np.ndarray:
    """Map a working set one MPC period forward.

    Constraint rows are addressed structurally as (horizon step, leg, row);
    between consecutive ticks the horizon shifts by one step, so step k
    becomes step k - 1.  Rows whose block no longer exists are dropped.
    """
    old_blocks = [
        (k, leg)
        for k in range(old_schedule.shape[0])
        for leg in range(4)
        if old_schedule[k, leg]
    ]
    new_table = _row_starts(new_schedule)
    out = set()
    for r in np.asarray(active, dtype=int):
        k, leg = old_blocks[r // 6]
        base = new_table.get((k - 1, leg))
        if base is not None:
            out.add(base + (r % 6))
    return np.array(sorted(out), dtype=int)


def _shift_primal(
    u_prev: np.ndarray, old_schedule: np.ndarray, new_schedule: np.ndarray
) -> np.ndarray:
    """Shift a force plan one MPC period forward as the next tick's start point.

    New step k reuses old step k + 1's forces when the contact sets match;
    unmatched steps start at zero, which the friction pyramid always allows.
    """
    old_cols = np.concatenate([[0], np.cumsum(3 * old_schedule.sum(axis=1))])
    new_cols = np.concatenate([[0], np.cumsum(3 * new_schedule.sum(axis=1))])
    out = np.zeros(int(new_cols[-1]))
    n_old = old_schedule.shape[0]
    for k in range(new_schedule.shape[0]):
        ko = k + 1
        if ko < n_old and (old_schedule[ko] == new_schedule[k]).all():
            out[new_cols[k] : new_cols[k + 1]] = u_prev[old_cols[ko] : old_cols[ko + 1]]
    return out


def control_tick(
    plant: PlantState,
    fsm: FsmState,
    t: float,
    cfg: ScenarioConfig,
    foot_pos_world: np.ndarray,
    gait_params: GaitParams | None,
    warm: dict | None = None,
    swing_targets: list[np.ndarray | None] | None = None,
) -> tuple[FootForces, TickInfo]:
    """One MPC update: model the horizon, solve the QP, return step-0 forces.

    ``gait_params`` of None means the gait clock is not running (settle or
    static stand) and the horizon is full stance.  ``warm`` is a mutable dict
    carrying the previous tick's active set and schedule between calls.

    Contact anchors: a leg continuously in stance from now keeps its live
    foot position; each later touchdown in the schedule gets a Raibert
    target at the hip position predicted for that step.  A leg already in
    swing has its touchdown committed, so ``swing_targets`` lets the caller
    pass the planned landing point and the first touchdown uses it verbatim
    instead of a re-derived estimate.
    """
    params = cfg.robot
    theta = euler_from_rotation(plant.R)
    w_world = plant.R @ plant.w_body
    x0 = mpc_state(plant.p, plant.v, theta, w_world)

    # the command clock starts at gait onset; while settling, window samples
    # that fall before onset hold the initial stand pose (clamping the whole
    # window instead would leave the regulator chasing the upcoming ramp for
    # the entire settle phase)
    tau = t - cfg.settle
    n = cfg.horizon
    if tau >= 0.0:
        x_ref = reference_window(tau, n, cfg.dt_mpc, cfg.command)
    else:
        x_ref = np.concatenate([
            reference_point(max(0.0, tau + (k + 1) * cfg.dt_mpc), cfg.command)
            for k in range(n)
        ])
    if gait_params is None:
        schedule = np.ones((n, 4), dtype=bool)
    else:
        schedule = np.empty((n, 4), dtype=bool)
        schedule[0] = contact_state(fsm)
        if n > 1:
            schedule[1:] = predict_contacts(fsm, gait_params, n - 1, cfg.dt_mpc)

    hip_off_world = (plant.R @ params.hip_offsets_body().T).T
    t_st = gait_params.t_stance if gait_params is not None else n * cfg.dt_mpc

    # moment arms are taken against the body position predicted along the
    # reference velocity; against the current position alone the late-horizon
    # arms are wrong by v * N * dt, which at speed flips the sign of the
    # pitch torque the model attributes to a pinned foot
    psi_ref_now = reference_point(max(0.0, tau), cfg.command)[8]
    p_pred = np.empty((n, 3))
    p_pred[0] = plant.p
    for k in range(1, n):
        v_k = reference_point(
            max(0.0, tau + (k - 1) * cfg.dt_mpc), cfg.command
        )[3:6]
        p_pred[k] = p_pred[k - 1] + cfg.dt_mpc * v_k

    foot_rel = []
    anchor = np.array(foot_pos_world, dtype=float).copy()
    lifted = ~schedule[0]
    committed: list[np.ndarray | None] = (
        list(swing_targets) if swing_targets is not None else [None] * 4
    )
    for k in range(n):
        feet_k = []
        for leg in range(4):
            if schedule[k, leg]:
                if lifted[leg]:
                    if committed[leg] is not None:
                        anchor[leg] = committed[leg]
                        committed[leg] = None
                    else:
                        # touchdown at step k: place it under the hip it
                        # will have then, same rule the simulator applies
                        # at liftoff
                        ref_k = reference_point(
                            max(0.0, tau + k * cfg.dt_mpc), cfg.command
                        )
                        hip_k = p_pred[k] + rotation_z(
                            ref_k[8] - psi_ref_now
                        ) @ hip_off_world[leg]
                        anchor[leg] = raibert_footstep(
                            hip_k, plant.v, ref_k[3:6],
                            t_st, params.nominal_height, params.gravity,
                        )
                    lifted[leg] = False
                feet_k.append(anchor[leg] - p_pred[k])
            else:
                lifted[leg] = True
        foot_rel.append(np.array(feet_k, dtype=float).reshape(-1, 3))

    lb, ub = cfg.force_bounds()
    problem = assemble_qp(
        x0, x_ref, float(theta[2]), schedule, foot_rel, params, cfg.weights, cfg.dt_mpc, lb, ub
    )
    n_u = problem.h.shape[0]

    warm_rows = None
    warm_x0 = None
    if warm and warm.get("schedule") is not None:
        warm_rows = _shift_active_set(warm["active"], warm["schedule"], schedule)
        warm_x0 = _shift_primal(warm["u"], warm["schedule"], schedule)
    t0 = time.perf_counter()
    sol = solve(
        problem.h, problem.g, problem.a_ineq, problem.b_ineq,
        warm_start=warm_rows, x0=warm_x0,
    )
    qp_ms = (time.perf_counter() - t0) * 1e3
    if warm is not None:
        if sol.status is QpStatus.OPTIMAL:
            warm["active"] = sol.active_set
            warm["schedule"] = schedule
            warm["u"] = sol.u_star
        else:
            warm.clear()  # a stale plan would shift wrongly next tick

    contacts_now = schedule[0]
    f = np.zeros((4, 3))
    failed = sol.status is not QpStatus.OPTIMAL
    if not failed:
        n0 = int(contacts_now.sum())
        f[contacts_now] = sol.u_star[: 3 * n0].reshape(n0, 3)
        kkt_d = kkt_residuals(problem.h, problem.g, problem.a_ineq, problem.b_ineq, sol)
        kkt = (
            kkt_d["stationarity"],
            kkt_d["primal"],
            kkt_d["dual"],
            kkt_d["complementarity"],
        )
    else:
        kkt = (np.nan, np.nan, np.nan, np.nan)

    info = TickInfo(t, sol.status, sol.iterations, qp_ms, kkt, n_u, failed)
    return FootForces(f, contacts_now), info


def _touchdown_target(
    plant: PlantState,
    leg_offset_body: np.ndarray,
    t_ahead: float,
    tau: float,
    cfg: ScenarioConfig,
    t_stance: float,
) -> np.ndarray:
    """Raibert target for a swing starting now and landing ``t_ahead`` later.

    The hip is carried to touchdown along the reference -- translated by the
    reference velocity and rotated by the reference yaw advance.  This is
    feedforward only: carrying it with the measured motion instead feeds the
    step-to-step oscillation back into placement and destabilizes the gait.
    The velocity-error term keeps the raw measured velocity, which acts as a
    per-step damper.
    """
    ref_td = reference_point(tau + t_ahead, cfg.command)
    v_ref = ref_td[3:6]
    dpsi = ref_td[8] - reference_point(tau, cfg.command)[8]
    hip = plant.p + rotation_z(dpsi) @ (plant.R @ leg_offset_body) + v_ref * t_ahead
    return raibert_footstep(
        hip, plant.v, v_ref, t_stance,
        cfg.robot.nominal_height, cfg.robot.gravity,
    )


def run_scenario(cfg: ScenarioConfig) -> SimLog:
    """Run the closed loop for ``cfg.duration`` seconds.

    Loop order per 1 ms step: control tick (on 20 ms boundaries), disturbance
    evaluation, force masking by the live contact state, logging, divergence
    check, plant integration, then gait/swing bookkeeping.  Raises
    :class:`SimDivergedError` (carrying the truncated log) on a fall.
    """
    cfg.validate()
    params = cfg.robot
    gait_params = gait_table(cfg.gait)
    ratio = round(cfg.dt_mpc / cfg.dt_sim)
    n_steps = round(cfg.duration / cfg.dt_sim)
    settle_steps = round(cfg.settle / cfg.dt_sim)

    hips_body = params.hip_offsets_body()
    foot_pos = hips_body.copy()
    foot_pos[:, 2] = 0.0
    plant = PlantState(
        p=np.array([0.0, 0.0, cfg.command.z0]), v=np.zeros(3), R=np.eye(3), w_body=np.zeros(3)
    )

    fsm = FsmState.full_stance()
    gait_on = False
    plans: list[SwingPlan | None] = [None] * 4
    plan_t0 = np.zeros(4)

    forces = FootForces.zero()
    warm: dict = {}
    qp_failures = 0
    last_status = QP_STATUS_CODES[QpStatus.OPTIMAL]
    last_ms = 0.0

    log_t = np.empty(n_steps)
    log_p = np.empty((n_steps, 3))
    log_v = np.empty((n_steps, 3))
    log_theta = np.empty((n_steps, 3))
    log_w = np.empty((n_steps, 3))
    log_contacts = np.empty((n_steps, 4), dtype=bool)
    log_forces = np.empty((n_steps, 4, 3))
    log_ref = np.empty((n_steps, 13))
    log_status = np.empty(n_steps, dtype=np.int8)
    log_ms = np.empty(n_steps)
    ticks: list[TickInfo] = []

    def build_log(rows: int, diverged: bool = False, reason: str = "") -> SimLog:
        return SimLog(
            t=log_t[:rows],
            p=log_p[:rows],
            v=log_v[:rows],
            theta=log_theta[:rows],
            w_world=log_w[:rows],
            contacts=log_contacts[:rows],
            forces=log_forces[:rows],
            x_ref=log_ref[:rows],
            qp_status=log_status[:rows],
            qp_ms=log_ms[:rows],
            tick_t=np.array([ti.t for ti in ticks]),
            tick_ms=np.array([ti.qp_ms for ti in ticks]),
            tick_iterations=np.array([ti.iterations for ti in ticks], dtype=int),
            tick_status=np.array([QP_STATUS_CODES[ti.status] for ti in ticks], dtype=np.int8),
            tick_kkt=np.array([ti.kkt for ti in ticks]).reshape(-1, 4),
            qp_failures=qp_failures,
            diverged=diverged,
            reason=reason,
        )

    for i in range(n_steps):
        t = i * cfg.dt_sim

        if i % ratio == 0:
            # control-clock boundary: catch the gait bookkeeping up first,
            # so real mode changes land on the same 20 ms grid the horizon
            # prediction uses -- the controller then never sees a contact
            # switch it could not have predicted
            if gait_on:
                new_fsm = advance(fsm, gait_params, cfg.dt_mpc)
                for leg in range(4):
                    was, now = fsm.modes[leg], new_fsm.modes[leg]
                    if was is LegMode.STANCE and now is LegMode.SWING:
                        target = _touchdown_target(
                            plant, hips_body[leg],
                            TOUCHDOWN_EXTRAP * gait_params.t_swing,
                            max(0.0, t - cfg.settle), cfg,
                            gait_params.t_stance,
                        )
                        plans[leg] = SwingPlan(
                            foot_pos[leg].copy(), target,
                            DEFAULT_APEX_HEIGHT, gait_params.t_swing,
                        )
                        plan_t0[leg] = t
                    elif was is LegMode.SWING and now is LegMode.STANCE:
                        if plans[leg] is not None:
                            foot_pos[leg] = plans[leg].p_end.copy()
                        plans[leg] = None
                fsm = new_fsm
            elif i >= settle_steps:
                # engage the gait from cycle phase zero; legs that start
                # mid-swing get a plan over their remaining swing time
                gait_on = True
                fsm = FsmState.from_cycle_phase(gait_params, 0.0)
                phases = fsm.phase(gait_params)
                for leg in range(4):
                    if fsm.modes[leg] is LegMode.SWING:
                        t_left = (1.0 - phases[leg]) * gait_params.t_swing
                        target = _touchdown_target(
                            plant, hips_body[leg],
                            TOUCHDOWN_EXTRAP * t_left,
                            max(0.0, t - cfg.settle), cfg,
                            gait_params.t_stance,
                        )
                        plans[leg] = SwingPlan(
                            foot_pos[leg].copy(), target, DEFAULT_APEX_HEIGHT, t_left
                        )
                        plan_t0[leg] = t

            new_forces, info = control_tick(
                plant, fsm, t, cfg, foot_pos, gait_params if gait_on else None, warm,
                swing_targets=[p.p_end if p is not None else None for p in plans],
            )
            ticks.append(info)
            if info.failed:
                qp_failures += 1  # hold the previous tick's forces
            else:
                forces = new_forces
            last_status = QP_STATUS_CODES[info.status]
            last_ms = info.qp_ms

        f_ext = None
        if cfg.disturbances:
            f_ext = np.zeros(3)
            for d in cfg.disturbances:
                f_ext += bezier_force(t, d)

        live = contact_state(fsm)
        applied = FootForces(forces.f, forces.contact & live)

        theta = euler_from_rotation(plant.R)
        tau = max(0.0, t - cfg.settle)
        log_t[i] = t
        log_p[i] = plant.p
        log_v[i] = plant.v
        log_theta[i] = theta
        log_w[i] = plant.R @ plant.w_body
        log_contacts[i] = live
        log_forces[i] = applied.f
        log_ref[i] = reference_point(tau, cfg.command)
        log_status[i] = last_status
        log_ms[i] = last_ms

        if plant.p[2] < FALL_HEIGHT:
            raise SimDivergedError(build_log(i + 1, True, "body height below fall threshold"),
                                   t, "body height below fall threshold")
        if abs(theta[0]) > FALL_TILT or abs(theta[1]) > FALL_TILT:
            raise SimDivergedError(build_log(i + 1, True, "roll/pitch beyond fall threshold"),
                                   t, "roll/pitch beyond fall threshold")

        plant = integrate_step(plant, applied, foot_pos, cfg.dt_sim, params, f_ext)

        # swing feet track their plans on the real-time clock, independent of
        # the 20 ms quantization of the mode switches
        for leg in range(4):
            if plans[leg] is not None:
                s = (t + cfg.dt_sim - plan_t0[leg]) / plans[leg].duration
                foot_pos[leg] = swing_trajectory(plans[leg], min(max(s, 0.0), 1.0))[0]

    return build_log(n_steps)
