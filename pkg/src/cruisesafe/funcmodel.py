"""Hierarchical functional architecture and requirement traceability graph.

A model is a JSON document with top-level arrays ``requirements``,
``components``, ``flows`` and ``links`` plus an ordered ``functionalities``
list (requirement ids of the vehicle-level functions). See
docs/model-schema.md.

Link direction: ``from_id`` is the satisfying / derived element and
``to_id`` the element it answers to (a component Satisfies a requirement, a
child requirement is DerivedFrom its parent). Tracing Backward follows links
from -> to, i.e. towards the originating requirements; Forward goes the other
way, towards the implementing blocks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import DanglingReference, DuplicateId, ParseError, UnknownId


class Level(str, Enum):
    VEHICLE = "Vehicle"
    SYSTEM = "System"
    SUBSYSTEM = "Subsystem"


class BlockRole(str, Enum):
    INPUT = "Input"
    LOGIC = "Logic"
    OUTPUT = "Output"
    EXTERNAL = "External"


class FlowKind(str, Enum):
    SIGNAL = "Signal"
    ENERGY = "Energy"


class LinkKind(str, Enum):
    SATISFIES = "Satisfies"
    DERIVED_FROM = "DerivedFrom"
    MITIGATES = "Mitigates"
    IMPLEMENTS = "Implements"


class Category(str, Enum):
    FUNCTIONAL = "functional"
    SAFETY_GOAL = "safety_goal"
    FSR_L1 = "fsr_l1"
    FSR_L2 = "fsr_l2"


class Direction(str, Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"


@dataclass(frozen=True)
class Requirement:
    id: str
    text: str
    parent: str | None = None
    category: Category = Category.FUNCTIONAL

    def __post_init__(self):
        object.__setattr__(self, "category", Category(self.category))


@dataclass(frozen=True)
class Component:
    id: str
    level: Level
    block_role: BlockRole
    ports: tuple[str, ...] = ()
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "level", Level(self.level))
        object.__setattr__(self, "block_role", BlockRole(self.block_role))


@dataclass(frozen=True)
class Flow:
    id: str
    kind: FlowKind
    source: str
    sink: str
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", FlowKind(self.kind))


@dataclass(frozen=True)
class TraceLink:
    from_id: str
    to_id: str
    kind: LinkKind

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))


@dataclass(frozen=True)
class Violation:
    component_id: str
    rule: str
    message: str

    def record(self) -> dict:
        return {"component_id": self.component_id, "rule": self.rule, "message": self.message}


@dataclass(frozen=True)
class FunctionalModel:
    requirements: tuple[Requirement, ...] = ()
    components: tuple[Component, ...] = ()
    flows: tuple[Flow, ...] = ()
    links: tuple[TraceLink, ...] = ()
    functionalities: tuple[str, ...] = ()
    name: str = ""
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        idx: dict[str, Any] = {}
        for item in (*self.requirements, *self.components, *self.flows):
            if item.id in idx:
                raise DuplicateId(item.id)
            idx[item.id] = item
        object.__setattr__(self, "_index", idx)

    def __contains__(self, ident: str) -> bool:
        return ident in self._index

    def get(self, ident: str):
        try:
            return self._index[ident]
        except KeyError:
            raise UnknownId(ident) from None

    @property
    def requirement_ids(self) -> set[str]:
        return {r.id for r in self.requirements}

    def functionality_texts(self) -> list[str]:
        return [self.get(fid).text for fid in self.functionalities]

    def without_link(self, link: TraceLink) -> "FunctionalModel":
        return FunctionalModel(
            self.requirements, self.components, self.flows,
            tuple(l for l in self.links if l != link), self.functionalities, self.name,
        )


# -- loading -----------------------------------------------------------------

def _enum(cls, value, fieldname):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ParseError(f"invalid value {value!r}, expected one of: {allowed}", field=fieldname) from None


def _req_field(obj: dict, key: str, where: str, kind=str):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", field=where)
    if key not in obj:
        raise ParseError("missing required field", field=f"{where}.{key}")
    value = obj[key]
    if not isinstance(value, kind):
        raise ParseError(f"expected {kind.__name__}", field=f"{where}.{key}")
    return value


def model_from_dict(doc: dict) -> FunctionalModel:
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    for key in ("requirements", "components", "flows", "links"):
        if not isinstance(doc.get(key), list):
            raise ParseError("missing or non-array top-level key", field=key)

    reqs = []
    for i, r in enumerate(doc["requirements"]):
        where = f"requirements[{i}]"
        reqs.append(Requirement(
            id=_req_field(r, "id", where),
            text=_req_field(r, "text", where),
            parent=r.get("parent"),
            category=_enum(Category, r.get("category", "functional"), f"{where}.category"),
        ))

    flows = []
    for i, f in enumerate(doc["flows"]):
        where = f"flows[{i}]"
        flows.append(Flow(
            id=_req_field(f, "id", where),
            kind=_enum(FlowKind, _req_field(f, "kind", where), f"{where}.kind"),
            source=_req_field(f, "source", where),
            sink=_req_field(f, "sink", where),
            label=f.get("label", ""),
        ))

    comps = []
    for i, c in enumerate(doc["components"]):
        where = f"components[{i}]"
        cid = _req_field(c, "id", where)
        if "ports" in c:
            ports = tuple(c["ports"])
        else:
            ports = tuple(f.id for f in flows if cid in (f.source, f.sink))
        comps.append(Component(
            id=cid,
            level=_enum(Level, _req_field(c, "level", where), f"{where}.level"),
            block_role=_enum(BlockRole, _req_field(c, "block_role", where), f"{where}.block_role"),
            ports=ports,
            note=c.get("note", ""),
        ))

    links = []
    for i, l in enumerate(doc["links"]):
        where = f"links[{i}]"
        links.append(TraceLink(
            from_id=_req_field(l, "from", where),
            to_id=_req_field(l, "to", where),
            kind=_enum(LinkKind, _req_field(l, "kind", where), f"{where}.kind"),
        ))

    model = FunctionalModel(
        tuple(reqs), tuple(comps), tuple(flows), tuple(links),
        tuple(doc.get("functionalities", ())), doc.get("name", ""),
    )
    _check_structure(model)
    return model


def _check_structure(model: FunctionalModel) -> None:
    req_ids = model.requirement_ids
    comp_ids = {c.id for c in model.components}
    flow_ids = {f.id for f in model.flows}

    for r in model.requirements:
        if r.parent is not None and r.parent not in req_ids:
            raise DanglingReference(r.parent, f"requirement {r.id}.parent")
    # parent links must form a forest
    parents = {r.id: r.parent for r in model.requirements}
    for start in parents:
        seen, cur = set(), start
        while cur is not None:
            if cur in seen:
                raise ParseError(f"requirement parent cycle through {cur!r}", field="requirements")
            seen.add(cur)
            cur = parents[cur]

    for c in model.components:
        if c.level is Level.SUBSYSTEM and c.block_role is BlockRole.EXTERNAL:
            raise ParseError(f"subsystem block {c.id!r} must be Input, Logic or Output", field="block_role")
        for p in c.ports:
            if p not in flow_ids:
                raise DanglingReference(p, f"component {c.id}.ports")

    for f in model.flows:
        for end in (f.source, f.sink):
            if end not in comp_ids:
                raise DanglingReference(end, f"flow {f.id}")
        if f.source == f.sink:
            raise ParseError(f"flow {f.id!r} has identical source and sink", field="flows")

    seen_links = set()
    for l in model.links:
        for end in (l.from_id, l.to_id):
            if end not in model:
                raise DanglingReference(end, f"link {l.from_id}->{l.to_id}")
        key = (l.from_id, l.to_id, l.kind)
        if key in seen_links:
            raise DuplicateId(f"{l.from_id}->{l.to_id}:{l.kind.value}")
        seen_links.add(key)

    for fid in model.functionalities:
        if fid not in req_ids:
            raise DanglingReference(fid, "functionalities")


def loads_model(text: str) -> FunctionalModel:
    if not text.strip():
        raise ParseError("empty model document", line=1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return model_from_dict(doc)


def load_model(path: str | Path) -> FunctionalModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))


def model_to_dict(model: FunctionalModel) -> dict:
    return {
        "name": model.name,
        "functionalities": list(model.functionalities),
        "requirements": [
            {"id": r.id, "text": r.text, "parent": r.parent, "category": r.category.value}
            for r in model.requirements
        ],
        "components": [
            {"id": c.id, "level": c.level.value, "block_role": c.block_role.value,
             "ports": list(c.ports), "note": c.note}
            for c in model.components
        ],
        "flows": [
            {"id": f.id, "kind": f.kind.value, "source": f.source, "sink": f.sink, "label": f.label}
            for f in model.flows
        ],
        "links": [{"from": l.from_id, "to": l.to_id, "kind": l.kind.value} for l in model.links],
    }


def dumps_model(model: FunctionalModel) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


# -- queries -----------------------------------------------------------------

def validate_traceability(model: FunctionalModel) -> list[Violation]:
    """One violation per non-External component lacking a Satisfies link to a requirement."""
    req_ids = model.requirement_ids
    satisfied = {l.from_id for l in model.links if l.kind is LinkKind.SATISFIES and l.to_id in req_ids}
    return [
        Violation(c.id, "requirement-coupling",
                  f"{c.level.value} component {c.id!r} is not coupled to any functional requirement")
        for c in model.components
        if c.block_role is not BlockRole.EXTERNAL and c.id not in satisfied
    ]


def trace(model: FunctionalModel, ident: str, direction: Direction | str) -> list[tuple[str, ...]]:
    """All simple paths (at least one hop) starting at ``ident``, sorted lexicographically."""
    if ident not in model:
        raise UnknownId(ident)
    direction = Direction(direction)
    adj: dict[str, set[str]] = {}
    for l in model.links:
        a, b = (l.from_id, l.to_id) if direction is Direction.BACKWARD else (l.to_id, l.from_id)
        adj.setdefault(a, set()).add(b)

    paths = []

    def walk(path):
        for nxt in sorted(adj.get(path[-1], ())):
            if nxt in path:
                continue
            extended = path + (nxt,)
            paths.append(extended)
            walk(extended)

    walk((ident,))
    return sorted(paths)


def check_safety_chain(model: FunctionalModel, goal_id: str) -> list[Violation]:
    """Completeness of goal -> Level-1 FSRs -> Level-2 FSRs -> Input/Logic/Output blocks.

    Expects at least two Level-1 FSRs derived from the goal (detection and
    driver hand-back), every Level-1 FSR refined by a Level-2 FSR, every
    Level-2 FSR satisfied by a subsystem block, and the satisfying blocks to
    cover the Input, Logic and Output roles.
    """
    goal = model.get(goal_id)
    out = []

    def derived(parent_id, category):
        return sorted(
            l.from_id for l in model.links
            if l.kind is LinkKind.DERIVED_FROM and l.to_id == parent_id
            and isinstance(model.get(l.from_id), Requirement) and model.get(l.from_id).category is category
        )

    level1 = derived(goal.id, Category.FSR_L1)
    if len(level1) < 2:
        out.append(Violation(goal.id, "fsr-l1-count", f"expected >= 2 Level-1 FSRs under {goal.id}, found {len(level1)}"))
    roles = set()
    for fsr1 in level1:
        level2 = derived(fsr1, Category.FSR_L2)
        if not level2:
            out.append(Violation(fsr1, "fsr-l2-missing", f"{fsr1} has no Level-2 refinement"))
        for fsr2 in level2:
            blocks = [
                model.get(l.from_id) for l in model.links
                if l.kind is LinkKind.SATISFIES and l.to_id == fsr2 and isinstance(model.get(l.from_id), Component)
            ]
            if not blocks:
                out.append(Violation(fsr2, "fsr-l2-unallocated", f"{fsr2} is not satisfied by any block"))
            roles.update(b.block_role for b in blocks if b.level is Level.SUBSYSTEM)
    for role in (BlockRole.INPUT, BlockRole.LOGIC, BlockRole.OUTPUT):
        if level1 and role not in roles:
            out.append(Violation(goal.id, "fsr-role-coverage", f"no {role.value} block allocated under {goal.id}"))
    return out
