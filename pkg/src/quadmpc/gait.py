"""Gait scheduling: a per-leg stance/swing finite state machine.

Each leg runs an independent two-state machine (stance <-> swing) with fixed
phase durations taken from the gait definition.  Legs are synchronised only
through their phase offsets: offset ``o_i`` is the fraction of the gait cycle
at which leg ``i`` begins its stance phase.  Leg order everywhere is
FL, FR, RL, RR.

The FSM is a value type: :func:`advance` returns a new state, so the MPC can
roll the schedule forward over its horizon without touching the live state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

LEG_NAMES = ("FL", "FR", "RL", "RR")
NUM_LEGS = 4


class UnknownGaitError(KeyError):
    """Gait name not in the gait table."""


class LegMode(enum.Enum):
    STANCE = "stance"
    SWING = "swing"


@dataclass(frozen=True)
class GaitParams:
    """Gait timing: per-phase durations (s) and per-leg cycle offsets in [0, 1)."""

    name: str
    t_stance: float
    t_swing: float
    offsets: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if self.t_stance <= 0.0 or self.t_swing <= 0.0:
            raise ValueError("phase durations must be positive")
        if len(self.offsets) != NUM_LEGS:
            raise ValueError("need one offset per leg")

    @property
    def cycle_time(self) -> float:
        return self.t_stance + self.t_swing


# Offsets pair the legs in the usual way: trot = diagonal pairs, bound =
# front/rear pairs, pacing = left/right pairs, crawl = one leg swinging at a
# time, gallop = staggered rotary footfalls.
_GAITS = {
    "trot": GaitParams("trot", 0.1, 0.18, (0.0, 0.5, 0.5, 0.0)),
    "bound": GaitParams("bound", 0.12, 0.12, (0.0, 0.0, 0.5, 0.5)),
    "pacing": GaitParams("pacing", 0.08, 0.2, (0.0, 0.5, 0.0, 0.5)),
    "gallop": GaitParams("gallop", 0.08, 0.2, (0.0, 0.1, 0.5, 0.6)),
    "trot_run": GaitParams("trot_run", 0.12, 0.2, (0.0, 0.5, 0.5, 0.0)),
    "crawl": GaitParams("crawl", 0.3, 0.1, (0.0, 0.5, 0.75, 0.25)),
}


def gait_table(name: str) -> GaitParams:
    """Look up a named gait; raises :class:`UnknownGaitError` otherwise."""
    try:
        return _GAITS[name]
    except KeyError:
        raise UnknownGaitError(
            f"unknown gait {name!r}; known gaits: {', '.join(sorted(_GAITS))}"
        ) from None


def gait_names() -> tuple[str, ...]:
    return tuple(sorted(_GAITS))


@dataclass(frozen=True)
class FsmState:
    """Immutable FSM snapshot: per-leg mode and time spent in that mode."""

    modes: tuple[LegMode, LegMode, LegMode, LegMode]
    dwell: tuple[float, float, float, float]

    @classmethod
    def full_stance(cls) -> "FsmState":
        return cls((LegMode.STANCE,) * 4, (0.0,) * 4)

    @classmethod
    def from_cycle_phase(cls, gait: GaitParams, cycle_phase: float = 0.0) -> "FsmState":
        """State of the schedule at a given point of the gait cycle."""
        T = gait.cycle_time
        modes = []
        dwell = []
        for off in gait.offsets:
            local = ((cycle_phase - off) % 1.0) * T
            if local < gait.t_stance:
                modes.append(LegMode.STANCE)
                dwell.append(local)
            else:
                modes.append(LegMode.SWING)
                dwell.append(local - gait.t_stance)
        return cls(tuple(modes), tuple(dwell))

    def phase(self, gait: GaitParams) -> np.ndarray:
        """Normalised progress s_i in [0, 1) through each leg's current mode."""
        out = np.empty(NUM_LEGS)
        for i, (m, tbar) in enumerate(zip(self.modes, self.dwell)):
            dur = gait.t_stance if m is LegMode.STANCE else gait.t_swing
            out[i] = tbar / dur
        return out


def _phase_duration(gait: GaitParams, mode: LegMode) -> float:
    return gait.t_stance if mode is LegMode.STANCE else gait.t_swing


def advance(fsm: FsmState, gait: GaitParams, dt: float) -> FsmState:
    """Advance the schedule by ``dt`` seconds.

    When the dwell time reaches the current phase duration the leg toggles
    mode and the remainder carries over, so large ``dt`` may cross several
    phase boundaries without losing time.
    """
    if dt < 0.0:
        raise ValueError("dt must be non-negative")
    modes = list(fsm.modes)
    dwell = list(fsm.dwell)
    for i in range(NUM_LEGS):
        t = dwell[i] + dt
        dur = _phase_duration(gait, modes[i])
        while t >= dur:
            t -= dur
            modes[i] = LegMode.SWING if modes[i] is LegMode.STANCE else LegMode.STANCE
            dur = _phase_duration(gait, modes[i])
        dwell[i] = t
    return FsmState(tuple(modes), tuple(dwell))


def contact_state(fsm: FsmState) -> np.ndarray:
    """Boolean contact flags, true for legs in stance."""
    return np.array([m is LegMode.STANCE for m in fsm.modes])


def predict_contacts(fsm: FsmState, gait: GaitParams, n_steps: int, dt: float) -> np.ndarray:
    """Contact pattern over a lookahead horizon, without mutating ``fsm``.

    Row ``k`` is the contact state after advancing ``(k + 1) * dt`` from the
    given snapshot.
    """
    rows = np.empty((n_steps, NUM_LEGS), dtype=bool)
    cur = fsm
    for k in range(n_steps):
        cur = advance(cur, gait, dt)
        rows[k] = contact_state(cur)
    return rows
