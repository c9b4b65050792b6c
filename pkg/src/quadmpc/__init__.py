"""Quadruped locomotion via model-predictive contact-force control.

The pieces, bottom up: :mod:`~quadmpc.srb` (rigid-body plant and rotations),
:mod:`~quadmpc.legs` (leg kinematics, footstep targets, swing trajectories),
:mod:`~quadmpc.gait` (contact scheduling), :mod:`~quadmpc.reference`
(command-to-trajectory shaping), :mod:`~quadmpc.mpc` (linearization,
condensing, QP assembly), :mod:`~quadmpc.qp` (dense active-set solver),
:mod:`~quadmpc.sim` (closed loop), plus config/output/plotting/CLI plumbing.
"""

from .gait import FsmState, GaitParams, LegMode, UnknownGaitError, gait_names, gait_table
from .legs import LegGeometry, SwingPlan, leg_fk, leg_ik, leg_jacobian, raibert_footstep
from .mpc import Weights, assemble_qp, condense, continuous_ltv, discretize_zoh, mpc_state
from .qp import QpSolution, QpStatus, kkt_residuals, solve
from .reference import Command, reference_point, reference_window
from .sim import (
    DisturbanceSpec,
    ScenarioConfig,
    SimDivergedError,
    SimLog,
    bezier_force,
    control_tick,
    run_scenario,
)
from .srb import FootForces, PlantState, RobotParams, integrate_step

__version__ = "0.1.0"

__all__ = [
    "Command",
    "DisturbanceSpec",
    "FootForces",
    "FsmState",
    "GaitParams",
    "LegGeometry",
    "LegMode",
    "PlantState",
    "QpSolution",
    "QpStatus",
    "RobotParams",
    "ScenarioConfig",
    "SimDivergedError",
    "SimLog",
    "SwingPlan",
    "UnknownGaitError",
    "Weights",
    "assemble_qp",
    "bezier_force",
    "condense",
    "continuous_ltv",
    "control_tick",
    "discretize_zoh",
    "gait_names",
    "gait_table",
    "integrate_step",
    "kkt_residuals",
    "leg_fk",
    "leg_ik",
    "leg_jacobian",
    "mpc_state",
    "raibert_footstep",
    "reference_point",
    "reference_window",
    "run_scenario",
    "solve",
]
