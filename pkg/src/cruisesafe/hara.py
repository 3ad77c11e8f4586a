"""Hazard analysis and risk assessment.

Guidewords are applied to the vehicle-level functionalities to derive
malfunctions; hazards are crossed with operational situations to form
hazardous events, each rated for severity/exposure/controllability; the
ASIL comes from the ISO 26262-3 determination table (shipped as data in
fixtures/asil_table.json) and safety goals take the highest ASIL of the
events they address.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import ccstate
from .errors import MissingRating, ParseError, UngroupedHazard


class Guideword(str, Enum):
    LOSS_OF_FUNCTION = "LossOfFunction"
    MORE_THAN_INTENDED = "MoreThanIntended"
    LESS_THAN_INTENDED = "LessThanIntended"
    WRONG_DIRECTION = "WrongDirection"
    UNINTENDED_ACTIVATION = "UnintendedActivation"
    FAILURE_TO_UPDATE = "FailureToUpdate"


class Hazard(str, Enum):
    UNINTENDED_ACCELERATION = "UnintendedAcceleration"
    UNINTENDED_DECELERATION = "UnintendedDeceleration"
    UNINTENDED_MOVEMENT = "UnintendedMovement"
    REDUCED_MOVEMENT = "ReducedMovement"
    DANGEROUS_MOVEMENT = "DangerousMovement"
    UNINTENDED_REACTION = "UnintendedReaction"


HAZARD_DESCRIPTIONS = {
    Hazard.UNINTENDED_ACCELERATION: "Accident due to unintended acceleration",
    Hazard.UNINTENDED_DECELERATION: "Accident due to unintended deceleration",
    Hazard.UNINTENDED_MOVEMENT: "Accident due to unintended movement (late/sudden activation)",
    Hazard.REDUCED_MOVEMENT: "Accident due to reduced movement (engine braking)",
    Hazard.DANGEROUS_MOVEMENT: "Accident due to dangerous movement (fluctuating actuation)",
    Hazard.UNINTENDED_REACTION: "Accident due to unintended reaction (CAN message errors)",
}


class OperatingMode(str, Enum):
    MEDIUM_SPEED = "MediumSpeed"
    HIGH_SPEED = "HighSpeed"
    CORNERING = "Cornering"


class Asil(IntEnum):
    QM = 0
    A = 1
    B = 2
    C = 3
    D = 4

    def __str__(self):
        return self.name

    @classmethod
    def parse(cls, text: str) -> "Asil":
        return cls[text.strip().upper()]


@dataclass(frozen=True)
class Malfunction:
    id: str
    function_ref: int
    guideword: Guideword
    description: str


@dataclass(frozen=True)
class OperationalSituation:
    id: str
    operating: OperatingMode
    environment: str = "dry-road"
    traffic: str = "highway"

    def __post_init__(self):
        object.__setattr__(self, "operating", OperatingMode(self.operating))


@dataclass(frozen=True)
class SecRating:
    severity: int
    exposure: int
    controllability: int

    def __post_init__(self):
        for name, value, top in (("severity", self.severity, 3), ("exposure", self.exposure, 4),
                                 ("controllability", self.controllability, 3)):
            if not isinstance(value, int) or not 0 <= value <= top:
                raise ValueError(f"{name} must be an integer in 0..{top}, got {value!r}")

    @classmethod
    def parse(cls, s: str | int, e: str | int, c: str | int) -> "SecRating":
        def num(v):
            return int(str(v).lstrip("SECsec"))
        return cls(num(s), num(e), num(c))

    def __str__(self):
        return f"S{self.severity}/E{self.exposure}/C{self.controllability}"


@dataclass(frozen=True)
class HazardousEvent:
    id: str
    hazard: Hazard
    situation: OperationalSituation
    rating: SecRating
    rationale: str = ""

    @property
    def asil(self) -> Asil:
        return asil_of(self.rating)


@dataclass(frozen=True)
class SafetyGoal:
    id: str
    text: str
    asil: Asil
    safe_state: str
    addresses: tuple[str, ...]

    def __post_init__(self):
        if not self.addresses:
            raise ValueError(f"safety goal {self.id} must address at least one hazardous event")
        if not ccstate.is_safe_state(self.safe_state):
            raise ValueError(f"{self.safe_state!r} is not a safe state")


NOT_APPLICABLE = None


# -- ASIL determination -----------------------------------------------------

@lru_cache(maxsize=None)
def determination_table() -> dict[tuple[int, int, int], Asil]:
    """Load the shipped table into {(S, E, C): Asil} for S1..3, E1..4, C1..3."""
    raw = json.loads(resources.files("cruisesafe").joinpath("fixtures/asil_table.json").read_text())
    table = {}
    for s_key, rows in raw["table"].items():
        for e_key, cols in rows.items():
            for c_idx, value in enumerate(cols, start=1):
                table[(int(s_key[1:]), int(e_key[1:]), c_idx)] = Asil.parse(value)
    if len(table) != 36:
        raise ParseError(f"ASIL table has {len(table)} entries, expected 36")
    return table


def asil_of(rating: SecRating) -> Asil:
    if 0 in (rating.severity, rating.exposure, rating.controllability):
        return Asil.QM
    return determination_table()[(rating.severity, rating.exposure, rating.controllability)]


# -- malfunction derivation ---------------------------------------------------

# failure descriptions per functionality topic; topic picked by keyword
_TOPICS = (
    ("power", re.compile(r"power to the wheels", re.I)),
    ("speed", re.compile(r"current speed", re.I)),
    ("pedal", re.compile(r"brake pedal|clutch", re.I)),
    ("driver", re.compile(r"input from the driver", re.I)),
    ("energy", re.compile(r"electrical energy", re.I)),
)

G = Guideword
KNOWN_FAILURES = {
    ("power", G.LOSS_OF_FUNCTION): "no power delivered to the wheels while cruise control is on",
    ("power", G.MORE_THAN_INTENDED): "more power delivered to the wheels than requested",
    ("power", G.LESS_THAN_INTENDED): "less power delivered to the wheels than requested",
    ("power", G.WRONG_DIRECTION): "power reduced when an increase was requested",
    ("power", G.UNINTENDED_ACTIVATION): "power delivered to the wheels without a request",
    ("power", G.FAILURE_TO_UPDATE): "delivered power does not follow a changed request",
    ("speed", G.LOSS_OF_FUNCTION): "speed feedback unavailable",
    ("speed", G.MORE_THAN_INTENDED): "speed feedback reads higher than actual",
    ("speed", G.LESS_THAN_INTENDED): "speed feedback reads lower than actual",
    ("speed", G.WRONG_DIRECTION): "speed feedback trend inverted",
    ("speed", G.UNINTENDED_ACTIVATION): "spurious speed value delivered to the processing unit",
    ("speed", G.FAILURE_TO_UPDATE): "speed feedback frozen at a stale value",
    ("pedal", G.LOSS_OF_FUNCTION): "brake/clutch pressed but no signal sent",
    ("pedal", G.MORE_THAN_INTENDED): "repeated brake/clutch signals for a single press",
    ("pedal", G.LESS_THAN_INTENDED): "brake/clutch signal too short to be registered",
    ("pedal", G.WRONG_DIRECTION): "brake/clutch release reported as press",
    ("pedal", G.UNINTENDED_ACTIVATION): "brake/clutch signal without pedal press",
    ("pedal", G.FAILURE_TO_UPDATE): "brake/clutch signal stuck after release",
    ("driver", G.LOSS_OF_FUNCTION): "driver command not forwarded",
    ("driver", G.MORE_THAN_INTENDED): "set speed forwarded higher than selected",
    ("driver", G.LESS_THAN_INTENDED): "set speed forwarded lower than selected",
    ("driver", G.WRONG_DIRECTION): "increase/decrease set speed commands swapped",
    ("driver", G.UNINTENDED_ACTIVATION): "cruise control activated without driver command",
    ("driver", G.FAILURE_TO_UPDATE): "changed driver command not forwarded",
    ("energy", G.LOSS_OF_FUNCTION): "loss of electrical supply to connected components",
    ("energy", G.MORE_THAN_INTENDED): "over-voltage on connected components",
    ("energy", G.LESS_THAN_INTENDED): "under-voltage on connected components",
    ("energy", G.WRONG_DIRECTION): "reverse polarity on connected components",
    ("energy", G.UNINTENDED_ACTIVATION): "components powered while the vehicle is off",
    ("energy", G.FAILURE_TO_UPDATE): "supply does not follow load changes",
}
del G


def _topic(function_text: str) -> str | None:
    for name, pattern in _TOPICS:
        if pattern.search(function_text):
            return name
    return None


def derive_malfunctions(
    functionalities: Sequence[str],
    applicability: Mapping[int, Iterable[Guideword | str]],
) -> list[Malfunction]:
    """One malfunction per (function index, applicable guideword), ordered by index then guideword."""
    order = list(Guideword)
    out = []
    for ref in sorted(applicability):
        if not 0 <= ref < len(functionalities):
            raise IndexError(f"functionality index {ref} out of range")
        words = sorted({Guideword(g) for g in applicability[ref]}, key=order.index)
        text = functionalities[ref]
        for gw in words:
            desc = KNOWN_FAILURES.get((_topic(text), gw)) or f"{gw.value}: {text.rstrip('.')}"
            out.append(Malfunction(f"MF{ref + 1}.{order.index(gw) + 1}", ref, gw, desc))
    return out


# -- hazardous events and goals ---------------------------------------------

def enumerate_events(
    hazards: Sequence[Hazard],
    situations: Sequence[OperationalSituation],
    ratings: Mapping[tuple[Hazard, str], SecRating | None],
    rationale: Mapping[tuple[Hazard, str], str] | None = None,
) -> list[HazardousEvent]:
    """Cross hazards with situations. ``ratings`` is keyed by (hazard, situation id);
    a value of NOT_APPLICABLE (None) drops the pair, a missing key is an error."""
    rationale = rationale or {}
    events = []
    for hz in hazards:
        hz = Hazard(hz)
        for sit in situations:
            key = (hz, sit.id)
            if key not in ratings:
                raise MissingRating(hz.value, sit.id)
            rating = ratings[key]
            if rating is NOT_APPLICABLE:
                continue
            events.append(HazardousEvent(f"HE{len(events) + 1:02d}", hz, sit, rating, rationale.get(key, "")))
    return events


def rollup_safety_goals(
    events: Sequence[HazardousEvent],
    grouping: Mapping[Hazard, str],
    safe_state: str,
    goal_ids: Sequence[str] | None = None,
) -> list[SafetyGoal]:
    """One goal per distinct goal text in ``grouping`` (first-appearance order).

    Goal ids default to SG01, SG02, ...; the ASIL is the max over member events.
    """
    texts = list(dict.fromkeys(grouping.values()))
    if goal_ids is None:
        goal_ids = [f"SG{i + 1:02d}" for i in range(len(texts))]
    members: dict[str, list[HazardousEvent]] = {t: [] for t in texts}
    for ev in events:
        if ev.hazard not in grouping:
            raise UngroupedHazard(ev.hazard.value)
        members[grouping[ev.hazard]].append(ev)
    goals = []
    for gid, text in zip(goal_ids, texts):
        evs = members[text]
        if not evs:
            raise ValueError(f"safety goal {gid} addresses no hazardous event")
        goals.append(SafetyGoal(gid, text, max(e.asil for e in evs), safe_state, tuple(e.id for e in evs)))
    return goals


# -- fixture -------------------------------------------------------------------

@dataclass
class HaraFixture:
    hazards: list[Hazard]
    situations: list[OperationalSituation]
    ratings: dict[tuple[Hazard, str], SecRating | None]
    rationale: dict[tuple[Hazard, str], str]
    goals: list[dict]
    safe_state: str
    functionalities: list[str] = field(default_factory=list)
    applicability: dict[int, list[Guideword]] = field(default_factory=dict)

    @property
    def grouping(self) -> dict[Hazard, str]:
        return {Hazard(h): g["text"] for g in self.goals for h in g["hazards"]}

    @property
    def goal_ids(self) -> list[str]:
        return [g["id"] for g in self.goals]

    @property
    def expected_asils(self) -> dict[str, Asil]:
        return {g["id"]: Asil.parse(g["expected_asil"]) for g in self.goals if "expected_asil" in g}

    def goal_for(self, hazard: Hazard | str) -> str | None:
        for g in self.goals:
            if Hazard(hazard).value in g["hazards"]:
                return g["id"]
        return None


def loads_hara(text: str) -> HaraFixture:
    if not text.strip():
        raise ParseError("empty HARA document", line=1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    try:
        hazards = [Hazard(h) for h in doc["hazards"]]
        situations = [
            OperationalSituation(s["id"], s["operating"], s.get("environment", ""), s.get("traffic", ""))
            for s in doc["situations"]
        ]
        ratings, rationale = {}, {}
        for i, r in enumerate(doc["ratings"]):
            key = (Hazard(r["hazard"]), r["situation"])
            ratings[key] = None if r.get("not_applicable") else SecRating.parse(r["S"], r["E"], r["C"])
            rationale[key] = r.get("rationale", "")
        goals = doc["goals"]
        safe_state = doc["safe_state"]
        applicability = {int(k): [Guideword(g) for g in v] for k, v in doc.get("guidewords", {}).items()}
    except KeyError as exc:
        raise ParseError("missing required field", field=str(exc.args[0])) from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return HaraFixture(hazards, situations, ratings, rationale, goals, safe_state,
                       doc.get("functionalities", []), applicability)


def load_hara(path: str | Path) -> HaraFixture:
    return loads_hara(Path(path).read_text(encoding="utf-8"))


@dataclass
class HaraResult:
    malfunctions: list[Malfunction]
    events: list[HazardousEvent]
    goals: list[SafetyGoal]

    def report_records(self) -> list[dict]:
        by_id = {e.id: e for e in self.events}
        return [
            {
                "goal_id": g.id,
                "text": g.text,
                "asil": g.asil.name,
                "safe_state": g.safe_state,
                "events": [
                    {"id": eid, "hazard": by_id[eid].hazard.value, "situation": by_id[eid].situation.id,
                     "rating": str(by_id[eid].rating), "asil": by_id[eid].asil.name}
                    for eid in g.addresses
                ],
            }
            for g in self.goals
        ]


def run_hara(fx: HaraFixture) -> HaraResult:
    malfunctions = derive_malfunctions(fx.functionalities, fx.applicability) if fx.functionalities else []
    events = enumerate_events(fx.hazards, fx.situations, fx.ratings, fx.rationale)
    goals = rollup_safety_goals(events, fx.grouping, fx.safe_state, fx.goal_ids)
    return HaraResult(malfunctions, events, goals)
