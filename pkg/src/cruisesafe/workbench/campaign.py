"""Campaign runner and report assembly."""

from __future__ import annotations

import datetime as _dt
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from .. import funcmodel
from ..errors import InvalidScenario, ParseError
from ..hara import HaraFixture, load_hara, run_hara
from ..simcore import Scenario, simulate, scenario_from_dict
from .classify import HazardLabel, Thresholds, classify_trace

THREADS_ENV = "CRUISESAFE_THREADS"


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("cruisesafe").joinpath("fixtures", name)))


@dataclass
class Campaign:
    id: str
    scenarios: list[Scenario]
    hara: HaraFixture
    thresholds: Thresholds = field(default_factory=Thresholds)
    output_dir: Path | None = None
    model: funcmodel.FunctionalModel | None = None

    def __post_init__(self):
        seen = set()
        for s in self.scenarios:
            if s.id in seen:
                raise InvalidScenario("duplicate scenario id", field="id", scenario_id=s.id)
            seen.add(s.id)


@dataclass
class ScenarioResult:
    id: str
    label: HazardLabel
    violated_goals: list[str]
    protected_goals: list[str]
    monitor_enabled: bool
    fault_start: float | None
    detection_latency: float | None
    settled_speed: float
    final_mode: str

    def record(self) -> dict:
        return {
            "id": self.id,
            "label": self.label.value,
            "violated_goals": self.violated_goals,
            "protected_goals": self.protected_goals,
            "monitor_enabled": self.monitor_enabled,
            "fault_start": self.fault_start,
            "detection_latency": self.detection_latency,
            "settled_speed": round(self.settled_speed, 6),
            "final_mode": self.final_mode,
        }


def _goals_for(label: HazardLabel, hara: HaraFixture) -> list[str]:
    if label.hazard is None:
        return []
    goal = hara.goal_for(label.hazard)
    return [goal] if goal else []


def run_scenario(scenario: Scenario, hara: HaraFixture, thresholds: Thresholds) -> ScenarioResult:
    trace = simulate(scenario)
    label = classify_trace(trace, thresholds)
    violated = _goals_for(label, hara)
    protected: list[str] = []
    latency = None
    start = scenario.fault_start
    if scenario.monitor_enabled:
        if trace.error_time is not None and start is not None:
            latency = round(trace.error_time - start, 9)
        # counterfactual: which goals would the same fault violate without the monitor
        twin = simulate(replace(scenario, monitor_enabled=False))
        at_risk = _goals_for(classify_trace(twin, thresholds), hara)
        protected = [g for g in at_risk if g not in violated]
    return ScenarioResult(scenario.id, label, violated, protected, scenario.monitor_enabled, start, latency,
                          trace.settled_speed(min(10.0, scenario.duration)), trace.cc_mode[-1])


def pool_width(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def run_campaign(campaign: Campaign, workers: int | None = None) -> dict:
    """Simulate, classify and fold results into a report (ordered by scenario id)."""
    for s in campaign.scenarios:
        s.validate()

    width = pool_width(workers)
    jobs = sorted(campaign.scenarios, key=lambda s: s.id)
    if width == 1 or len(jobs) <= 1:
        results = [run_scenario(s, campaign.hara, campaign.thresholds) for s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(lambda s: run_scenario(s, campaign.hara, campaign.thresholds), jobs))
    results.sort(key=lambda r: r.id)

    hara_result = run_hara(campaign.hara)
    goal_status = []
    for g in hara_result.goals:
        violated_by = [r.id for r in results if g.id in r.violated_goals]
        protected_in = [r.id for r in results if g.id in r.protected_goals]
        goal_status.append({"goal_id": g.id, "asil": g.asil.name,
                            "violated_in": violated_by, "protected_in": protected_in})

    report = {
        "campaign_id": campaign.id,
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "scenarios": [r.record() for r in results],
        "goals": goal_status if results else [],
        "hara": hara_result.report_records(),
        "traceability": _traceability_summary(campaign.model),
    }
    return report


def _traceability_summary(model: funcmodel.FunctionalModel | None) -> dict | None:
    if model is None:
        return None
    goals = [r.id for r in model.requirements if r.category is funcmodel.Category.SAFETY_GOAL]
    return {
        "components": len(model.components),
        "requirements": len(model.requirements),
        "violations": [v.record() for v in funcmodel.validate_traceability(model)],
        "safety_chains": {g: [v.record() for v in funcmodel.check_safety_chain(model, g)] for g in goals},
    }


def report_payload(report: dict) -> str:
    """Report serialized without its timestamp; stable across runs."""
    body = {k: v for k, v in report.items() if k != "generated_at"}
    return json.dumps(body, indent=2)


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


def load_campaign(path: str | Path) -> Campaign:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise ParseError("empty campaign document", line=1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    base = path.parent

    def resolve(ref: str | None, default: str | None) -> Path | None:
        if ref is None:
            return fixture_path(default) if default else None
        p = Path(ref)
        return p if p.is_absolute() else base / p

    hara = load_hara(resolve(doc.get("hara"), "cc_hara.model"))
    model_ref = resolve(doc.get("model"), "cruise_control.model")
    model = funcmodel.load_model(model_ref) if model_ref else None

    scenarios = []
    for i, entry in enumerate(doc.get("scenarios", [])):
        if isinstance(entry, str):
            sp = resolve(entry, None)
            try:
                sdoc = json.loads(sp.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{sp}: {exc.msg}", line=exc.lineno) from None
            scenarios.append(scenario_from_dict(sdoc, sp.parent))
        else:
            scenarios.append(scenario_from_dict(entry, base))
    out = doc.get("output_dir")
    return Campaign(
        id=str(doc.get("id", path.stem)),
        scenarios=scenarios,
        hara=hara,
        thresholds=Thresholds.from_dict(doc.get("thresholds")),
        output_dir=resolve(out, None) if out else None,
        model=model,
    )
