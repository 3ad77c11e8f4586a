import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cruisesafe.ccstate import (
    DISENGAGING_EVENTS,
    Action,
    CcEvent,
    CcState,
    EventKind,
    Mode,
    is_safe_state,
    mode_from_name,
    step,
    transition_rows,
    transition_table_csv,
)
from cruisesafe.errors import ResumeWithoutMemory

ON25 = CcState(Mode.ON, 25.0)


def test_driver_on_arms():
    assert step(CcState(), CcEvent(EventKind.DRIVER_ON)) == (CcState(Mode.ENGAGED), [Action.NONE])


def test_brake_disengages_and_keeps_speed():
    assert step(ON25, CcEvent(EventKind.BRAKE_SIGNAL)) == (
        CcState(Mode.DISENGAGED, 25.0), [Action.ACTUATOR_SIGNAL_OFF])


def test_vehicle_off_clears_memory():
    assert step(CcState(Mode.DISENGAGED, 25.0), CcEvent(EventKind.VEHICLE_OFF)) == (
        CcState(), [Action.CLEAR_MEMORY])


def test_vehicle_off_from_on_releases_actuator():
    assert step(ON25, CcEvent(EventKind.VEHICLE_OFF))[1] == [Action.ACTUATOR_SIGNAL_OFF, Action.CLEAR_MEMORY]


def test_irrelevant_event_is_self_loop():
    assert step(CcState(), CcEvent(EventKind.BRAKE_SIGNAL)) == (CcState(), [Action.NONE])


def test_engage_notifies_driver():
    new, actions = step(CcState(Mode.ENGAGED), CcEvent.cc_on(27.5))
    assert new == CcState(Mode.ON, 27.5)
    assert actions == [Action.ACTUATOR_SIGNAL_ON, Action.NOTIFY_DRIVER]


def test_cc_on_from_disengaged_overwrites_memory():
    new, actions = step(CcState(Mode.DISENGAGED, 25.0), CcEvent.cc_on(30.0))
    assert new == CcState(Mode.ON, 30.0)
    assert actions == [Action.ACTUATOR_SIGNAL_ON]


def test_resume_without_memory_raises():
    with pytest.raises(ResumeWithoutMemory):
        step(CcState(Mode.DISENGAGED), CcEvent(EventKind.DRIVER_RESUME))


def test_driver_off_from_engaged_goes_off():
    assert step(CcState(Mode.ENGAGED), CcEvent(EventKind.DRIVER_OFF))[0] == CcState()


@pytest.mark.parametrize("bad", [
    lambda: CcState(Mode.OFF, 10.0),
    lambda: CcState(Mode.ON),
    lambda: CcEvent(EventKind.DRIVER_CC_ON, 0.0),
    lambda: CcEvent(EventKind.DRIVER_CC_ON),
    lambda: CcEvent(EventKind.BRAKE_SIGNAL, 3.0),
])
def test_invariants_enforced(bad):
    with pytest.raises(ValueError):
        bad()


@pytest.mark.parametrize("state,safe", [
    (CcState(Mode.DISENGAGED, 25.0), True),
    (ON25, False),
    (CcState(), True),
    (CcState(Mode.ENGAGED), False),
])
def test_is_safe_state(state, safe):
    assert is_safe_state(state) is safe


def test_safe_state_names():
    assert mode_from_name("CC_Disengaged") is Mode.DISENGAGED
    assert mode_from_name("CC_ Disengaged") is Mode.DISENGAGED
    assert is_safe_state("CC_Disengaged")
    with pytest.raises(ValueError):
        mode_from_name("Cruising")


def test_export_matches_docs(fixtures_dir):
    docs = fixtures_dir.parents[2] / "docs" / "statemachine.csv"
    assert docs.read_text() == transition_table_csv()


def test_table_covers_every_context_and_event():
    rows = transition_rows()
    assert len(rows) == 5 * len(EventKind)
    assert len({r[:3] for r in rows}) == len(rows)


# -- random event sequences ---------------------------------------------------

def events():
    simple = st.sampled_from([k for k in EventKind if k is not EventKind.DRIVER_CC_ON]).map(CcEvent)
    cc_on = st.floats(min_value=1.0, max_value=50.0).map(CcEvent.cc_on)
    return st.one_of(simple, cc_on)


def run(seq):
    """Returns (state, last actuator action, last set speed seen) while checking per-step invariants."""
    state, last_act, last_set = CcState(), None, None
    for ev in seq:
        before = state
        try:
            state, actions = step(state, ev)
        except ResumeWithoutMemory:
            assert before.mode is Mode.DISENGAGED and before.stored_set_speed is None
            continue
        assert step(before, ev) == (state, actions)  # determinism
        for a in actions:
            if a in (Action.ACTUATOR_SIGNAL_ON, Action.ACTUATOR_SIGNAL_OFF):
                last_act = a
        if ev.kind is EventKind.DRIVER_CC_ON and state.mode is Mode.ON and before.mode is not Mode.ON:
            last_set = ev.set_speed
        if ev.kind is EventKind.VEHICLE_OFF:
            last_set = None
        if state.mode is not Mode.OFF and state.stored_set_speed is not None:
            assert state.stored_set_speed == last_set
    return state, last_act, last_set


@settings(max_examples=300, deadline=None)
@given(st.lists(events(), max_size=40))
def test_actuator_release_invariant(seq):
    state, last_act, _ = run(seq)
    assert (last_act is Action.ACTUATOR_SIGNAL_ON) == (state.mode is Mode.ON)


@settings(max_examples=300, deadline=None)
@given(st.lists(events(), max_size=40), st.sampled_from(sorted(DISENGAGING_EVENTS)))
def test_memory_survives_disengage_resume(seq, disengage):
    state, _, last_set = run(seq)
    if state.mode is not Mode.ON:
        return
    mid, _ = step(state, CcEvent(disengage))
    assert mid.mode is Mode.DISENGAGED
    back, actions = step(mid, CcEvent(EventKind.DRIVER_RESUME))
    assert back == CcState(Mode.ON, last_set)
    assert actions == [Action.ACTUATOR_SIGNAL_ON]
    assert step(back, CcEvent(EventKind.VEHICLE_OFF))[0].stored_set_speed is None
