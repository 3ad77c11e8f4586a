"""Fixed-step longitudinal vehicle simulation with fault entry points.

Per step k (t = k*dt) the loop does, in order:

1. sensor: v_measured = faults(SpeedFeedback, v_actual)
2. driver script events due at t go through the cruise control state machine
3. controller (only in On) on the faulted set-speed command, then
   ActuatorCommand faults on its output
4. runtime monitor (if enabled) on the commanded CC throttle; an error
   forces the safe state and zeroes the CC throttle from this step on
5. record, then integrate the plant with max(throttle_cc, throttle_driver)
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import ccstate
from .ccstate import Action, CcEvent, CcState, EventKind, Mode
from .errors import InvalidScenario, ParseError, ResumeWithoutMemory

EPS = 1e-9


@dataclass(frozen=True)
class PlantParams:
    mass: float = 1500.0
    max_traction_force: float = 4000.0
    drag_area_coeff: float = 0.46  # 0.5 * rho * Cd * A
    rolling_coeff: float = 0.01
    gravity: float = 9.81

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"plant parameter {name} must be finite and > 0")
        if self.mass < 100:
            raise ValueError("plant mass must be >= 100 kg")

    def equilibrium_throttle(self, v: float) -> float:
        return (self.drag_area_coeff * v * v + self.rolling_coeff * self.mass * self.gravity) / self.max_traction_force


@dataclass(frozen=True)
class ControllerParams:
    kp: float = 0.12
    ki: float = 0.02
    output_min: float = 0.0
    output_max: float = 1.0
    integrator_min: float = 0.0
    integrator_max: float = 20.0

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ValueError("controller gains must be >= 0")
        if not 0.0 <= self.output_min < self.output_max <= 1.0:
            raise ValueError("controller output limits must satisfy 0 <= min < max <= 1")
        if not self.integrator_min <= self.integrator_max:
            raise ValueError("integrator clamp bounds are not ordered")


def plant_step(v: float, throttle: float, p: PlantParams, dt: float) -> float:
    """Explicit Euler step of the longitudinal point-mass model on a flat road."""
    force = throttle * p.max_traction_force - p.drag_area_coeff * v * v - p.rolling_coeff * p.mass * p.gravity
    return max(0.0, v + dt * force / p.mass)


def controller_step(v_measured: float, v_set: float, integrator: float,
                    c: ControllerParams, dt: float) -> tuple[float, float]:
    """PI speed controller with clamped integrator. Returns (throttle, integrator)."""
    e = v_set - v_measured
    integrator = min(c.integrator_max, max(c.integrator_min, integrator + e * dt))
    u = c.kp * e + c.ki * integrator
    return min(c.output_max, max(c.output_min, u)), integrator


# -- faults ------------------------------------------------------------------

class FaultTarget(str, Enum):
    SPEED_FEEDBACK = "SpeedFeedback"
    DRIVER_INTERFACE = "DriverInterface"
    ACTUATOR_COMMAND = "ActuatorCommand"


class FaultKind(str, Enum):
    OFFSET = "Offset"
    GAIN = "Gain"
    STUCK_AT = "StuckAt"
    DROPOUT = "Dropout"
    DELAY = "Delay"
    INTERMITTENT = "Intermittent"


@dataclass(frozen=True)
class FaultSpec:
    """One fault on one signal.

    ``value`` is the Offset amount, Gain factor, StuckAt level (None latches
    the signal at window start) or Delay length in steps. Intermittent fires
    its ``payload`` fault with ``probability`` per step, drawn from ``seed``.
    """

    target: FaultTarget
    kind: FaultKind
    window: tuple[float, float]
    value: float | None = None
    probability: float | None = None
    seed: int | None = None
    payload: "FaultSpec | None" = None

    def __post_init__(self):
        object.__setattr__(self, "target", FaultTarget(self.target))
        object.__setattr__(self, "kind", FaultKind(self.kind))
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if self.window[0] > self.window[1]:
            raise ValueError("fault window start is after its end")
        if self.kind in (FaultKind.OFFSET, FaultKind.GAIN) and self.value is None:
            raise ValueError(f"{self.kind.value} fault needs a value")
        if self.kind is FaultKind.DELAY and (self.value is None or int(self.value) < 1):
            raise ValueError("Delay fault needs a step count >= 1")
        if self.kind is FaultKind.INTERMITTENT:
            if self.seed is None:
                raise ValueError("Intermittent fault needs a seed")
            if self.probability is None or not 0.0 <= self.probability <= 1.0:
                raise ValueError("Intermittent probability must be in [0, 1]")
            if self.payload is None or self.payload.kind is FaultKind.INTERMITTENT:
                raise ValueError("Intermittent fault needs a non-intermittent payload")

    def active(self, t: float) -> bool:
        return self.window[0] - EPS <= t <= self.window[1] + EPS


class _FaultStage:
    """Runtime state of one fault (latches, history, rng)."""

    def __init__(self, spec: FaultSpec):
        self.spec = spec
        self.latched: float | None = None
        self.prev_out: float | None = None
        depth = int(spec.value) if spec.kind is FaultKind.DELAY else 0
        self.history: deque[float] = deque(maxlen=depth + 1)
        self.rng = np.random.default_rng(spec.seed) if spec.kind is FaultKind.INTERMITTENT else None
        self.payload = _FaultStage(spec.payload) if spec.payload is not None else None

    def __call__(self, x: float, t: float, active: bool | None = None) -> tuple[float, bool]:
        spec = self.spec
        if active is None:
            active = spec.active(t)
        self.history.append(x)
        if not active:
            self.latched = None
            out, fired = x, False
        elif spec.kind is FaultKind.OFFSET:
            out, fired = x + spec.value, True
        elif spec.kind is FaultKind.GAIN:
            out, fired = x * spec.value, True
        elif spec.kind is FaultKind.STUCK_AT:
            if self.latched is None:
                self.latched = x if spec.value is None else float(spec.value)
            out, fired = self.latched, True
        elif spec.kind is FaultKind.DROPOUT:
            out = x if self.prev_out is None else self.prev_out
            fired = True
        elif spec.kind is FaultKind.DELAY:
            out, fired = self.history[0], True
        else:
            hit = bool(self.rng.random() < spec.probability)
            out, fired = self.payload(x, t, active=hit)
        self.prev_out = out
        return out, fired


class FaultInjector:
    """Applies a list of faults; several faults on one target compose in declaration order."""

    def __init__(self, faults: Sequence[FaultSpec]):
        self.stages: dict[FaultTarget, list[_FaultStage]] = {}
        for f in faults:
            self.stages.setdefault(f.target, []).append(_FaultStage(f))

    def apply(self, target: FaultTarget, value: float, t: float) -> tuple[float, bool]:
        fired_any = False
        for stage in self.stages.get(target, ()):
            value, fired = stage(value, t)
            fired_any = fired_any or fired
        return value, fired_any

    def apply_bundle(self, bundle: dict[FaultTarget, float], t: float) -> dict[FaultTarget, float]:
        return {target: self.apply(target, value, t)[0] for target, value in bundle.items()}


def apply_faults(bundle: dict[FaultTarget, float], faults: Sequence[FaultSpec] | FaultInjector,
                 t: float) -> dict[FaultTarget, float]:
    """Transform a {target: value} signal bundle at time t.

    Stateful kinds (StuckAt latching, Dropout, Delay, Intermittent rng) keep
    their state in the FaultInjector; pass the same injector every step.
    """
    injector = faults if isinstance(faults, FaultInjector) else FaultInjector(faults)
    return injector.apply_bundle(bundle, t)


# -- scenario ------------------------------------------------------------------

@dataclass(frozen=True)
class ScriptEvent:
    t: float
    event: CcEvent


@dataclass(frozen=True)
class PedalOverride:
    t_start: float
    t_end: float
    throttle: float


@dataclass(frozen=True)
class Scenario:
    id: str = "scenario"
    dt: float = 0.01
    duration: float = 60.0
    initial_speed: float = 0.0
    script: tuple[ScriptEvent, ...] = ()
    pedal: tuple[PedalOverride, ...] = ()
    plant: PlantParams = field(default_factory=PlantParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    faults: tuple[FaultSpec, ...] = ()
    monitor_enabled: bool = False
    monitor_table: Any = field(default=None, compare=False, repr=False)

    def validate(self) -> None:
        def bad(msg, fld):
            raise InvalidScenario(msg, field=fld, scenario_id=self.id)

        if not (math.isfinite(self.dt) and self.dt > 0):
            bad("dt must be > 0", "dt")
        if not (math.isfinite(self.duration) and self.duration >= self.dt):
            bad("duration must be >= dt", "duration")
        if not (math.isfinite(self.initial_speed) and self.initial_speed >= 0):
            bad("initial_speed must be >= 0", "initial_speed")
        for i, f in enumerate(self.faults):
            if f.window[0] < -EPS or f.window[1] > self.duration + EPS:
                bad("fault window outside scenario duration", f"faults[{i}].window")
        for i, p in enumerate(self.pedal):
            if not 0.0 <= p.throttle <= 1.0:
                bad("pedal throttle must be in [0, 1]", f"pedal[{i}].throttle")
        for i, ev in enumerate(self.script):
            if not (math.isfinite(ev.t) and ev.t >= 0):
                bad("script event time must be >= 0", f"script[{i}].t")
        if self.monitor_enabled and self.monitor_table is None:
            bad("monitor enabled but no monitor table given", "monitor_table")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + EPS))

    @property
    def fault_start(self) -> float | None:
        return min((f.window[0] for f in self.faults), default=None)


def _fault_from_dict(d: dict, where: str) -> FaultSpec:
    try:
        payload = _fault_from_dict({**d["payload"], "target": d["target"], "window": d["window"]},
                                   f"{where}.payload") if "payload" in d else None
        return FaultSpec(
            target=d["target"], kind=d["kind"], window=tuple(d["window"]),
            value=d.get("value"), probability=d.get("probability"), seed=d.get("seed"), payload=payload,
        )
    except KeyError as exc:
        raise ParseError("missing required field", field=f"{where}.{exc.args[0]}") from None
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc), field=where) from None


def _fault_to_dict(f: FaultSpec) -> dict:
    d: dict[str, Any] = {"target": f.target.value, "kind": f.kind.value, "window": list(f.window)}
    if f.value is not None:
        d["value"] = f.value
    if f.kind is FaultKind.INTERMITTENT:
        d["probability"] = f.probability
        d["seed"] = f.seed
        p = _fault_to_dict(f.payload)
        d["payload"] = {k: v for k, v in p.items() if k not in ("target", "window")}
    return d


def scenario_from_dict(doc: dict, base_dir: Path | None = None, monitor_table=None) -> Scenario:
    """Build a Scenario from its JSON form. ``monitor_table`` (a path relative to
    the file, or an already-loaded table) is required when the monitor is on."""
    if not isinstance(doc, dict):
        raise ParseError("scenario must be an object")
    try:
        script = []
        for i, ev in enumerate(doc.get("script", [])):
            kind = EventKind(ev["event"])
            cc_ev = CcEvent(kind, ev.get("set_speed")) if kind is EventKind.DRIVER_CC_ON else CcEvent(kind)
            script.append(ScriptEvent(float(ev["t"]), cc_ev))
        pedal = tuple(PedalOverride(float(p["t_start"]), float(p["t_end"]), float(p["throttle"]))
                      for p in doc.get("pedal", []))
        plant = PlantParams(**doc.get("plant", {}))
        controller = ControllerParams(**doc.get("controller", {}))
    except KeyError as exc:
        raise ParseError("missing required field", field=str(exc.args[0])) from None
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc)) from None
    faults = tuple(_fault_from_dict(f, f"faults[{i}]") for i, f in enumerate(doc.get("faults", [])))

    monitor_enabled = bool(doc.get("monitor_enabled", False))
    table = monitor_table
    if table is None and monitor_enabled:
        from importlib import resources

        from .safemon.table import load_table
        if doc.get("monitor_table"):
            ref = Path(doc["monitor_table"])
            if base_dir is not None and not ref.is_absolute():
                ref = base_dir / ref
        else:
            ref = Path(str(resources.files("cruisesafe").joinpath("fixtures", "monitor_table.json")))
        table = load_table(ref, plant=plant, controller=controller, dt=float(doc.get("dt", 0.01)))

    for key in ("duration", "initial_speed"):
        if key not in doc:
            raise ParseError("missing required field", field=key)
    try:
        return Scenario(
            id=str(doc.get("id", "scenario")),
            dt=float(doc.get("dt", 0.01)),
            duration=float(doc["duration"]),
            initial_speed=float(doc["initial_speed"]),
            script=tuple(script), pedal=pedal, plant=plant, controller=controller, faults=faults,
            monitor_enabled=monitor_enabled, monitor_table=table,
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def scenario_to_dict(s: Scenario, monitor_table_ref: str | None = None) -> dict:
    script = []
    for ev in s.script:
        d = {"t": ev.t, "event": ev.event.kind.value}
        if ev.event.set_speed is not None:
            d["set_speed"] = ev.event.set_speed
        script.append(d)
    doc = {
        "id": s.id, "dt": s.dt, "duration": s.duration, "initial_speed": s.initial_speed,
        "script": script,
        "pedal": [asdict(p) for p in s.pedal],
        "plant": asdict(s.plant), "controller": asdict(s.controller),
        "faults": [_fault_to_dict(f) for f in s.faults],
        "monitor_enabled": s.monitor_enabled,
    }
    if monitor_table_ref:
        doc["monitor_table"] = monitor_table_ref
    return doc


def loads_scenario(text: str, base_dir: Path | None = None, monitor_table=None) -> Scenario:
    if not text.strip():
        raise ParseError("empty scenario document", line=1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return scenario_from_dict(doc, base_dir, monitor_table)


def load_scenario(path: str | Path, monitor_table=None) -> Scenario:
    path = Path(path)
    return loads_scenario(path.read_text(encoding="utf-8"), path.parent, monitor_table)


def cruise_scenario(v0: float, v_set: float, *, duration: float = 120.0, faults: Iterable[FaultSpec] = (),
                    monitor_table=None, scenario_id: str | None = None, **kw) -> Scenario:
    """Engage at t=0 from speed ``v0`` with set speed ``v_set``."""
    return Scenario(
        id=scenario_id or f"cruise_{v0:g}_{v_set:g}",
        duration=duration, initial_speed=v0,
        script=(ScriptEvent(0.0, CcEvent(EventKind.DRIVER_ON)), ScriptEvent(0.0, CcEvent.cc_on(v_set))),
        faults=tuple(faults), monitor_enabled=monitor_table is not None, monitor_table=monitor_table, **kw,
    )


def speed_offset(b: float, start: float, end: float) -> FaultSpec:
    return FaultSpec(FaultTarget.SPEED_FEEDBACK, FaultKind.OFFSET, (start, end), value=b)


# -- trace ---------------------------------------------------------------------

TRACE_COLUMNS = ("t", "v_actual", "v_measured", "v_set", "throttle_cc", "throttle_driver",
                 "cc_mode", "fault_active", "monitor_error")


@dataclass
class ModeChange:
    t: float
    step: int
    from_mode: str
    to_mode: str
    cause: str | None  # script event name, "monitor", or None if unexplained


@dataclass
class Trace:
    dt: float
    t: np.ndarray
    v_actual: np.ndarray
    v_measured: np.ndarray
    v_set: np.ndarray
    throttle_cc: np.ndarray
    throttle_driver: np.ndarray
    cc_mode: list[str]
    fault_active: np.ndarray
    monitor_error: np.ndarray
    mode_changes: list[ModeChange] | None = None
    script_log: list[tuple[float, str, str]] = field(default_factory=list)
    error_time: float | None = None

    def __len__(self):
        return len(self.t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for k in range(len(self.t)):
            w.writerow((
                repr(float(self.t[k])), repr(float(self.v_actual[k])), repr(float(self.v_measured[k])),
                repr(float(self.v_set[k])), repr(float(self.throttle_cc[k])), repr(float(self.throttle_driver[k])),
                self.cc_mode[k], int(self.fault_active[k]), int(self.monitor_error[k]),
            ))
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> "Trace":
        reader = csv.reader(io.StringIO(text))
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ParseError("empty trace file", line=1) from None
        if header != TRACE_COLUMNS:
            raise ParseError("unexpected trace header", line=1)
        cols: list[list] = [[] for _ in TRACE_COLUMNS]
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_COLUMNS):
                raise ParseError(f"expected {len(TRACE_COLUMNS)} columns", line=lineno)
            try:
                for i, cell in enumerate(row):
                    cols[i].append(cell if i == 6 else float(cell))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
        t = np.array(cols[0])
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(dt, t, *(np.array(c) for c in cols[1:6]), cols[6],
                   np.array(cols[7], dtype=bool), np.array(cols[8], dtype=bool))

    def settled_speed(self, window: float = 10.0) -> float:
        n = max(1, int(round(window / self.dt)))
        return float(np.mean(self.v_actual[-n:]))


# -- main loop -----------------------------------------------------------------

def simulate(scenario: Scenario) -> Trace:
    scenario.validate()
    from .safemon.monitor import Monitor  # safemon.calibrate imports this module

    dt, plant, ctrl = scenario.dt, scenario.plant, scenario.controller
    n = scenario.n_steps + 1
    script = sorted(scenario.script, key=lambda e: e.t)
    injector = FaultInjector(scenario.faults)
    monitor = Monitor(scenario.monitor_table, dt) if scenario.monitor_enabled else None

    t_col = np.empty(n)
    va, vm, vs, tcc, tdr = (np.empty(n) for _ in range(5))
    modes: list[str] = []
    fault_col = np.zeros(n, dtype=bool)
    err_col = np.zeros(n, dtype=bool)
    changes: list[ModeChange] = []
    script_log: list[tuple[float, str, str]] = []
    error_time = None

    cc = CcState()
    integrator = 0.0
    v = scenario.initial_speed
    ei = 0
    SF, DI, AC = FaultTarget.SPEED_FEEDBACK, FaultTarget.DRIVER_INTERFACE, FaultTarget.ACTUATOR_COMMAND

    for k in range(n):
        t = k * dt
        v_meas, f1 = injector.apply(SF, v, t)

        while ei < len(script) and script[ei].t <= t + EPS:
            ev = script[ei].event
            ei += 1
            if monitor is not None and monitor.latched and ev.kind is EventKind.DRIVER_RESUME:
                script_log.append((t, ev.kind.value, "suppressed:monitor-latched"))
                continue
            try:
                new, actions = ccstate.step(cc, ev)
            except ResumeWithoutMemory:
                script_log.append((t, ev.kind.value, "rejected:ResumeWithoutMemory"))
                continue
            script_log.append((t, ev.kind.value, "+".join(a.value for a in actions)))
            if Action.ACTUATOR_SIGNAL_ON in actions:
                integrator = 0.0
                if monitor is not None:
                    monitor.engage(v_meas, new.stored_set_speed, fresh=ev.kind is EventKind.DRIVER_CC_ON)
            if new.mode is not cc.mode:
                changes.append(ModeChange(t, k, cc.mode.value, new.mode.value, ev.kind.value))
            cc = new

        v_set_true = cc.stored_set_speed
        f2 = False
        if cc.mode is Mode.ON:
            v_set_cmd, f2 = injector.apply(DI, v_set_true, t)
            throttle_cc, integrator = controller_step(v_meas, v_set_cmd, integrator, ctrl, dt)
        else:
            throttle_cc = 0.0
        throttle_cc, f3 = injector.apply(AC, throttle_cc, t)
        throttle_cc = min(1.0, max(0.0, throttle_cc))

        throttle_driver = 0.0
        for p in scenario.pedal:
            if p.t_start - EPS <= t <= p.t_end + EPS and p.throttle > throttle_driver:
                throttle_driver = p.throttle

        if monitor is not None:
            if cc.mode is Mode.ON:
                error = monitor.observe(throttle_cc, suppressed=throttle_driver > throttle_cc)
                if error:
                    from .safemon.monitor import enforce_safe_state
                    new, _ = enforce_safe_state(True, cc)
                    if new.mode is not cc.mode:
                        changes.append(ModeChange(t, k, cc.mode.value, new.mode.value, "monitor"))
                    cc = new
                    if error_time is None:
                        error_time = t
            if monitor.latched:
                throttle_cc = 0.0
            err_col[k] = monitor.latched

        t_col[k] = t
        va[k] = v
        vm[k] = v_meas
        vs[k] = v_set_true if v_set_true is not None else math.nan
        tcc[k] = throttle_cc
        tdr[k] = throttle_driver
        modes.append(cc.mode.value)
        fault_col[k] = f1 or f2 or f3 or any(f.active(t) for f in scenario.faults)

        if k < n - 1:
            v = plant_step(v, max(throttle_cc, throttle_driver), plant, dt)

    return Trace(dt, t_col, va, vm, vs, tcc, tdr, modes, fault_col, err_col, changes, script_log, error_time)
