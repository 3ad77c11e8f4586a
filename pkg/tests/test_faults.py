import pytest
from hypothesis import given
from hypothesis import strategies as st

from cruisesafe.simcore import FaultInjector, FaultKind, FaultSpec, FaultTarget, apply_faults

SF = FaultTarget.SPEED_FEEDBACK
ACT = FaultTarget.ACTUATOR_COMMAND


def run(faults, xs, target=SF, dt=1.0):
    inj = FaultInjector(faults)
    return [inj.apply(target, x, k * dt)[0] for k, x in enumerate(xs)]


def test_offset_inside_window():
    f = FaultSpec(SF, FaultKind.OFFSET, (0.0, 10.0), value=-5.0)
    assert apply_faults({SF: 25.0}, [f], 3.0) == {SF: 20.0}


def test_gain():
    f = FaultSpec(SF, FaultKind.GAIN, (0.0, 10.0), value=1.2)
    assert apply_faults({SF: 25.0}, [f], 3.0)[SF] == pytest.approx(30.0)


def test_stuck_at_value():
    f = FaultSpec(ACT, FaultKind.STUCK_AT, (2.0, 4.0), value=0.9)
    assert run([f], [0.1] * 6, target=ACT) == [0.1, 0.1, 0.9, 0.9, 0.9, 0.1]


def test_stuck_at_latches_entry_value():
    f = FaultSpec(SF, FaultKind.STUCK_AT, (2.0, 4.0))
    assert run([f], [1, 2, 3, 4, 5, 6]) == [1, 2, 3, 3, 3, 6]


def test_dropout_holds_last_output():
    f = FaultSpec(SF, FaultKind.DROPOUT, (2.0, 3.0))
    assert run([f], [1, 2, 3, 4, 5]) == [1, 2, 2, 2, 5]


def test_delay_in_steps():
    f = FaultSpec(SF, FaultKind.DELAY, (2.0, 10.0), value=2)
    assert run([f], [0, 1, 2, 3, 4, 5]) == [0, 1, 0, 1, 2, 3]


def test_intermittent_deterministic():
    payload = FaultSpec(SF, FaultKind.OFFSET, (0.0, 100.0), value=1.0)
    f = FaultSpec(SF, FaultKind.INTERMITTENT, (0.0, 100.0), probability=0.5, seed=11, payload=payload)
    a, b = run([f], [0.0] * 100), run([f], [0.0] * 100)
    assert a == b
    assert 20 < sum(a) < 80
    assert run([FaultSpec(SF, FaultKind.INTERMITTENT, (0.0, 100.0), probability=0.5, seed=12, payload=payload)],
               [0.0] * 100) != a


def test_intermittent_probability_extremes():
    payload = FaultSpec(SF, FaultKind.OFFSET, (0.0, 100.0), value=1.0)
    never = FaultSpec(SF, FaultKind.INTERMITTENT, (0.0, 100.0), probability=0.0, seed=1, payload=payload)
    always = FaultSpec(SF, FaultKind.INTERMITTENT, (0.0, 100.0), probability=1.0, seed=1, payload=payload)
    assert run([never], [0.0] * 10) == [0.0] * 10
    assert run([always], [0.0] * 10) == [1.0] * 10


def test_composition_in_declaration_order():
    stuck = FaultSpec(SF, FaultKind.STUCK_AT, (0.0, 10.0), value=0.5)
    gain = FaultSpec(SF, FaultKind.GAIN, (0.0, 10.0), value=2.0)
    assert run([stuck, gain], [7.0])[0] == pytest.approx(1.0)
    assert run([gain, stuck], [7.0])[0] == pytest.approx(0.5)


def test_other_targets_untouched():
    f = FaultSpec(SF, FaultKind.OFFSET, (0.0, 10.0), value=3.0)
    assert apply_faults({SF: 1.0, ACT: 0.4}, [f], 1.0) == {SF: 4.0, ACT: 0.4}


@pytest.mark.parametrize("kwargs", [
    dict(kind=FaultKind.OFFSET, window=(0, 1)),
    dict(kind=FaultKind.DELAY, window=(0, 1), value=0),
    dict(kind=FaultKind.OFFSET, window=(2, 1), value=1),
    dict(kind=FaultKind.INTERMITTENT, window=(0, 1), probability=0.5),
    dict(kind=FaultKind.INTERMITTENT, window=(0, 1), probability=1.5, seed=1,
         payload=FaultSpec(SF, FaultKind.OFFSET, (0, 1), value=1)),
])
def test_bad_specs(kwargs):
    with pytest.raises(ValueError):
        FaultSpec(SF, **kwargs)


kinds = st.sampled_from([FaultKind.OFFSET, FaultKind.GAIN, FaultKind.STUCK_AT, FaultKind.DROPOUT, FaultKind.DELAY])


@given(kinds, st.floats(-10, 10), st.floats(0, 50), st.floats(0, 50),
       st.lists(st.floats(-100, 100), min_size=1, max_size=40))
def test_identity_outside_window(kind, value, a, b, xs):
    start, end = 200.0 + min(a, b), 200.0 + max(a, b)
    f = FaultSpec(SF, kind, (start, end), value=abs(value) + 1 if kind is FaultKind.DELAY else value)
    assert run([f], xs) == xs
