import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cruisesafe.ccstate import is_safe_state
from cruisesafe.errors import MissingRating, ParseError, UngroupedHazard
from cruisesafe.hara import (
    NOT_APPLICABLE,
    Asil,
    Guideword,
    Hazard,
    HazardousEvent,
    OperationalSituation,
    SafetyGoal,
    SecRating,
    asil_of,
    derive_malfunctions,
    enumerate_events,
    loads_hara,
    rollup_safety_goals,
    run_hara,
)

ALL = list(itertools.product(range(4), range(5), range(4)))

# independent transcription of the ISO 26262-3 determination table, one row per S/E pair
TRANSCRIBED = """
S1 E1 QM QM QM
S1 E2 QM QM QM
S1 E3 QM QM A
S1 E4 QM A  B
S2 E1 QM QM QM
S2 E2 QM QM A
S2 E3 QM A  B
S2 E4 A  B  C
S3 E1 QM QM A
S3 E2 QM A  B
S3 E3 A  B  C
S3 E4 B  C  D
"""


def transcribed_asil(s, e, c):
    if 0 in (s, e, c):
        return Asil.QM
    for line in TRANSCRIBED.strip().splitlines():
        row = line.split()
        if row[0] == f"S{s}" and row[1] == f"E{e}":
            return Asil.parse(row[1 + c])
    raise AssertionError("row missing")


def additive_asil(s, e, c):
    # the table is equivalent to ASIL = QM + (S + E + C - 6) clipped at QM
    if 0 in (s, e, c):
        return Asil.QM
    return Asil(max(0, s + e + c - 6))


@pytest.mark.parametrize("s,e,c", ALL)
def test_asil_table_against_transcription(s, e, c):
    assert asil_of(SecRating(s, e, c)) == transcribed_asil(s, e, c) == additive_asil(s, e, c)


def test_asil_examples():
    assert asil_of(SecRating(1, 1, 1)) is Asil.QM
    assert asil_of(SecRating(3, 4, 3)) is Asil.D
    assert asil_of(SecRating(3, 4, 2)) is Asil.C


def test_asil_order():
    assert Asil.QM < Asil.A < Asil.B < Asil.C < Asil.D
    assert min(Asil) is Asil.QM and max(Asil) is Asil.D


@pytest.mark.parametrize("axis", range(3))
def test_asil_monotone(axis):
    tops = (3, 4, 3)
    for s, e, c in ALL:
        x = [s, e, c]
        if x[axis] == tops[axis]:
            continue
        y = list(x)
        y[axis] += 1
        assert asil_of(SecRating(*x)) <= asil_of(SecRating(*y))


def test_qm_floor():
    for s, e, c in ALL:
        if 0 in (s, e, c):
            assert asil_of(SecRating(s, e, c)) is Asil.QM


def test_rating_bounds():
    with pytest.raises(ValueError):
        SecRating(4, 1, 1)
    with pytest.raises(ValueError):
        SecRating(1, 5, 1)
    assert SecRating.parse("S3", "E4", "C2") == SecRating(3, 4, 2)


FUNCS = [
    "Deliver requested power to the wheels.",
    "Acquire the current speed of the vehicle and provides the speed value to the processing unit.",
    "Provide signal to the processing unit when the brake pedal/clutch pedal is pressed.",
    "Provide input from the driver to the processing system.",
    "Provide electrical energy to connected components.",
]


def test_speed_more_than_intended():
    [mf] = derive_malfunctions(["Acquire the current speed of the vehicle"], {0: [Guideword.MORE_THAN_INTENDED]})
    assert mf.description == "speed feedback reads higher than actual"
    assert mf.function_ref == 0


def test_no_applicability_no_malfunctions():
    assert derive_malfunctions(FUNCS, {}) == []


def test_full_cartesian():
    mfs = derive_malfunctions(FUNCS, {i: list(Guideword) for i in range(5)})
    assert len(mfs) == 30
    assert len({(m.function_ref, m.guideword) for m in mfs}) == 30
    assert len({m.id for m in mfs}) == 30
    assert len(Guideword) == 6


def test_unknown_function_gets_generic_description():
    [mf] = derive_malfunctions(["Open the sunroof"], {0: ["LossOfFunction"]})
    assert "Open the sunroof" in mf.description


SITS = [OperationalSituation("OS1", "MediumSpeed"), OperationalSituation("OS2", "HighSpeed"),
        OperationalSituation("OS3", "Cornering")]


def test_enumerate_full_matrix():
    ratings = {(h, s.id): SecRating(1, 1, 1) for h in Hazard for s in SITS}
    events = enumerate_events(list(Hazard), SITS, ratings)
    assert len(events) == 18


def test_not_applicable_pair_omitted():
    ratings = {(h, s.id): SecRating(2, 2, 2) for h in Hazard for s in SITS}
    ratings[(Hazard.REDUCED_MOVEMENT, "OS3")] = NOT_APPLICABLE
    events = enumerate_events(list(Hazard), SITS, ratings)
    assert len(events) == 17
    assert all(not (e.hazard is Hazard.REDUCED_MOVEMENT and e.situation.id == "OS3") for e in events)


def test_missing_rating():
    ratings = {(h, s.id): SecRating(2, 2, 2) for h in Hazard for s in SITS}
    del ratings[(Hazard.UNINTENDED_ACCELERATION, "OS3")]
    with pytest.raises(MissingRating) as info:
        enumerate_events(list(Hazard), SITS, ratings)
    assert info.value.pair == ("UnintendedAcceleration", "OS3")


def test_situation_operating_mode_checked():
    with pytest.raises(ValueError):
        OperationalSituation("OSx", "Reversing")


def _ev(i, hazard, rating):
    return HazardousEvent(f"E{i}", hazard, SITS[0], rating)


def test_goal_takes_max_asil():
    evs = [_ev(1, Hazard.UNINTENDED_ACCELERATION, SecRating(1, 1, 1)),
           _ev(2, Hazard.UNINTENDED_ACCELERATION, SecRating(2, 4, 1)),
           _ev(3, Hazard.UNINTENDED_ACCELERATION, SecRating(3, 4, 2))]
    assert [e.asil for e in evs] == [Asil.QM, Asil.A, Asil.C]
    [goal] = rollup_safety_goals(evs, {Hazard.UNINTENDED_ACCELERATION: "no excess power"}, "CC_Disengaged")
    assert goal.asil is Asil.C
    assert goal.addresses == ("E1", "E2", "E3")


def test_empty_rollup():
    assert rollup_safety_goals([], {}, "CC_Disengaged") == []


def test_ungrouped_hazard():
    with pytest.raises(UngroupedHazard):
        rollup_safety_goals([_ev(1, Hazard.DANGEROUS_MOVEMENT, SecRating(1, 1, 1))], {}, "CC_Disengaged")


def test_goal_needs_events_and_safe_state():
    with pytest.raises(ValueError):
        SafetyGoal("SG", "x", Asil.A, "CC_Disengaged", ())
    with pytest.raises(ValueError):
        SafetyGoal("SG", "x", Asil.A, "On", ("E1",))


def test_bundled_hara_reproduces_goal_table(cc_hara):
    result = run_hara(cc_hara)
    assert [(g.id, g.asil, g.safe_state) for g in result.goals] == [
        ("SG01", Asil.C, "CC_Disengaged"), ("SG02", Asil.C, "CC_Disengaged"), ("SG03", Asil.QM, "CC_Disengaged")]
    assert len(result.events) == 18
    assert all(e.asil == asil_of(e.rating) for e in result.events)
    assert all(cc_hara.rationale[(e.hazard, e.situation.id)] for e in result.events)


def test_bundled_hara_malfunctions(cc_hara):
    result = run_hara(cc_hara)
    assert any(m.description == "speed feedback reads higher than actual" for m in result.malfunctions)


def test_hara_report_records(cc_hara):
    recs = run_hara(cc_hara).report_records()
    assert recs[0]["goal_id"] == "SG01" and recs[0]["asil"] == "C"
    assert {"id", "hazard", "situation", "rating", "asil"} <= set(recs[0]["events"][0])


def test_empty_hara_document():
    with pytest.raises(ParseError):
        loads_hara("   ")


rating_st = st.builds(SecRating, st.integers(0, 3), st.integers(0, 4), st.integers(0, 3))


@given(st.lists(st.tuples(st.sampled_from(list(Hazard)), rating_st), min_size=1, max_size=25),
       st.dictionaries(st.sampled_from(list(Hazard)), st.sampled_from(["g1", "g2", "g3"]), min_size=6, max_size=6))
def test_goal_dominance(pairs, grouping):
    events = [_ev(i, h, r) for i, (h, r) in enumerate(pairs)]
    used = {grouping[e.hazard] for e in events}
    grouping = {h: g for h, g in grouping.items() if g in used}
    goals = rollup_safety_goals(events, grouping, "CC_Disengaged")
    by_id = {e.id: e for e in events}
    for g in goals:
        members = [by_id[i] for i in g.addresses]
        assert all(m.asil <= g.asil for m in members)
        assert any(m.asil == g.asil for m in members)
        assert is_safe_state(g.safe_state)
    assert sum(len(g.addresses) for g in goals) == len(events)
