import json

import pytest

from cruisesafe.errors import InvalidScenario, ParseError
from cruisesafe.simcore import Scenario, cruise_scenario, speed_offset
from cruisesafe.workbench import Campaign, load_campaign, run_campaign
from cruisesafe.workbench.campaign import THREADS_ENV, pool_width, report_payload, write_report


@pytest.fixture(scope="module")
def bundled(fixtures_dir):
    return load_campaign(fixtures_dir / "offset_campaign.json")


@pytest.fixture(scope="module")
def bundled_report(bundled):
    return run_campaign(bundled)


def by_id(report):
    return {s["id"]: s for s in report["scenarios"]}


def test_bundled_campaign_outcome(bundled_report):
    s = by_id(bundled_report)
    off, on = s["offset_minus5_monitor_off"], s["offset_minus5_monitor_on"]
    assert off["label"] == "UnintendedAcceleration" and off["violated_goals"] == ["SG01"]
    assert on["label"] == "None" and on["violated_goals"] == [] and on["protected_goals"] == ["SG01"]
    assert on["detection_latency"] == pytest.approx(0.19, abs=0.05)
    assert on["final_mode"] == "Disengaged"
    assert off["detection_latency"] is None and off["protected_goals"] == []


def test_report_soundness(bundled_report):
    goals = {g["goal_id"]: g for g in bundled_report["goals"]}
    for s in bundled_report["scenarios"]:
        for g in s["violated_goals"]:
            assert s["id"] in goals[g]["violated_in"]
        for g in s["protected_goals"]:
            assert s["monitor_enabled"] and s["id"] in goals[g]["protected_in"]
            assert g not in s["violated_goals"]
    assert [h["goal_id"] for h in bundled_report["hara"]] == ["SG01", "SG02", "SG03"]
    assert bundled_report["traceability"]["violations"] == []


def test_payload_is_reproducible(bundled, bundled_report):
    assert report_payload(run_campaign(bundled)) == report_payload(bundled_report)


def test_serial_equals_parallel(bundled, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "1")
    serial = report_payload(run_campaign(bundled))
    assert serial == report_payload(run_campaign(bundled, workers=4))


def test_pool_width(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert pool_width() == 3
    assert pool_width(2) == 2
    monkeypatch.setenv(THREADS_ENV, "bogus")
    assert pool_width() >= 1


def test_empty_campaign(cc_hara):
    report = run_campaign(Campaign("empty", [], cc_hara))
    assert report["scenarios"] == [] and report["goals"] == []


def test_duplicate_ids_rejected(cc_hara):
    a = cruise_scenario(20, 25, duration=5, scenario_id="x")
    with pytest.raises(InvalidScenario):
        Campaign("dup", [a, a], cc_hara)


def test_invalid_scenario_propagates(cc_hara):
    bad = Scenario(id="bad", dt=-1.0)
    with pytest.raises(InvalidScenario) as info:
        run_campaign(Campaign("c", [cruise_scenario(20, 25, duration=5), bad], cc_hara))
    assert info.value.scenario_id == "bad"


def test_inline_scenarios_and_report_file(tmp_path, monitor_table):
    doc = {"id": "inline", "scenarios": [
        {"id": "b", "duration": 80, "initial_speed": 25.0,
         "script": [{"t": 0, "event": "DriverOn"}, {"t": 0, "event": "DriverCcOn", "set_speed": 25.0}],
         "faults": [{"target": "SpeedFeedback", "kind": "Offset", "value": 5.0, "window": [40, 80]}]},
    ]}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    report = run_campaign(load_campaign(path), workers=1)
    assert report["scenarios"][0]["label"] == "UnintendedDeceleration"
    assert report["scenarios"][0]["violated_goals"] == ["SG02"]
    out = tmp_path / "r.json"
    write_report(report, out)
    assert json.loads(out.read_text())["campaign_id"] == "inline"


def test_malformed_campaign(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{")
    with pytest.raises(ParseError):
        load_campaign(p)
    p.write_text("")
    with pytest.raises(ParseError):
        load_campaign(p)
