"""Gait table and stance/swing scheduling FSM."""

import numpy as np
import pytest

from quadmpc.gait import (
    FsmState,
    GaitParams,
    LegMode,
    UnknownGaitError,
    advance,
    contact_state,
    gait_names,
    gait_table,
    predict_contacts,
)

# the working set of gaits: (t_stance, t_swing, offsets)
GAIT_TIMING = {
    "trot": (0.1, 0.18, (0.0, 0.5, 0.5, 0.0)),
    "bound": (0.12, 0.12, (0.0, 0.0, 0.5, 0.5)),
    "pacing": (0.08, 0.2, (0.0, 0.5, 0.0, 0.5)),
    "gallop": (0.08, 0.2, (0.0, 0.1, 0.5, 0.6)),
    "trot_run": (0.12, 0.2, (0.0, 0.5, 0.5, 0.0)),
    "crawl": (0.3, 0.1, (0.0, 0.5, 0.75, 0.25)),
}


def test_gait_table_contents():
    assert set(gait_names()) == set(GAIT_TIMING)
    for name, (t_st, t_sw, off) in GAIT_TIMING.items():
        g = gait_table(name)
        assert (g.t_stance, g.t_swing, g.offsets) == (t_st, t_sw, off)
        assert g.cycle_time == pytest.approx(t_st + t_sw)


def test_unknown_gait_lists_names():
    with pytest.raises(UnknownGaitError, match="crawl"):
        gait_table("moonwalk")


def test_gait_params_validation():
    with pytest.raises(ValueError):
        GaitParams("bad", 0.0, 0.1, (0, 0, 0, 0))
    with pytest.raises(ValueError):
        GaitParams("bad", 0.1, 0.1, (0, 0, 0))


def test_full_stance():
    fsm = FsmState.full_stance()
    assert all(m is LegMode.STANCE for m in fsm.modes)
    assert contact_state(fsm).all()


def test_trot_phase_zero_diagonal_pairs():
    fsm = FsmState.from_cycle_phase(gait_table("trot"), 0.0)
    # FL and RR start their stance at phase 0; FR and RL are mid-swing
    assert fsm.modes[0] is LegMode.STANCE
    assert fsm.modes[3] is LegMode.STANCE
    assert fsm.modes[1] is LegMode.SWING
    assert fsm.modes[2] is LegMode.SWING


def test_advance_toggles_at_phase_boundary():
    g = gait_table("trot")
    fsm = FsmState.from_cycle_phase(g, 0.0)
    stepped = advance(fsm, g, g.t_stance + 1e-9)
    assert stepped.modes[0] is LegMode.SWING
    assert stepped.dwell[0] == pytest.approx(1e-9, abs=1e-12)
    # frozen value semantics: the original snapshot is untouched
    assert fsm.modes[0] is LegMode.STANCE


def test_advance_carries_remainder_across_multiple_phases():
    g = gait_table("bound")  # 0.12 / 0.12
    fsm = FsmState.from_cycle_phase(g, 0.0)
    # one full cycle plus a quarter stance in a single jump
    stepped = advance(fsm, g, g.cycle_time + 0.03)
    assert stepped.modes[0] is LegMode.STANCE
    assert stepped.dwell[0] == pytest.approx(0.03)


def test_advance_in_small_steps_matches_one_jump():
    g = gait_table("gallop")
    fsm = FsmState.from_cycle_phase(g, 0.17)
    a = advance(fsm, g, 0.731)
    b = fsm
    for _ in range(731):
        b = advance(b, g, 0.001)
    assert a.modes == b.modes
    assert np.allclose(a.dwell, b.dwell, atol=1e-9)


def test_phase_normalised():
    g = gait_table("crawl")
    fsm = FsmState.from_cycle_phase(g, 0.4)
    s = fsm.phase(g)
    assert ((s >= 0.0) & (s < 1.0)).all()


def test_negative_dt_rejected():
    with pytest.raises(ValueError):
        advance(FsmState.full_stance(), gait_table("trot"), -0.01)


def test_predict_contacts_matches_cycle_phase_oracle():
    """Row k of the prediction equals the schedule read off the gait clock."""
    for name in GAIT_TIMING:
        g = gait_table(name)
        phase0 = 0.21
        fsm = FsmState.from_cycle_phase(g, phase0)
        dt = 0.02
        table = predict_contacts(fsm, g, 15, dt)
        for k in range(15):
            phase_k = phase0 + (k + 1) * dt / g.cycle_time
            expect = contact_state(FsmState.from_cycle_phase(g, phase_k))
            assert np.array_equal(table[k], expect), (name, k)


def test_predict_contacts_leaves_fsm_untouched():
    g = gait_table("trot")
    fsm = FsmState.from_cycle_phase(g, 0.0)
    predict_contacts(fsm, g, 30, 0.02)
    assert fsm == FsmState.from_cycle_phase(g, 0.0)


def test_trot_has_flight_phases():
    # stance 0.1 s of a 0.28 s cycle: between diagonal-pair stances the
    # schedule is briefly all-airborne, and the predictor must say so
    g = gait_table("trot")
    fsm = FsmState.from_cycle_phase(g, 0.0)
    table = predict_contacts(fsm, g, 280, 0.001)
    per_row = table.sum(axis=1)
    assert (per_row == 0).any()
    assert (per_row == 2).any()
    assert not (per_row == 4).any()


def test_crawl_keeps_three_feet_down():
    g = gait_table("crawl")
    fsm = FsmState.from_cycle_phase(g, 0.0)
    table = predict_contacts(fsm, g, 400, 0.001)
    assert (table.sum(axis=1) >= 3).all()
