"""Cruise control mode logic.

Four modes: Off -> Engaged (armed, no actuator output) -> On (controlling)
-> Disengaged (released, set speed remembered). Off and Disengaged are safe
states; the actuator is only ever driven in On.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum

from .errors import ResumeWithoutMemory


class Mode(str, Enum):
    OFF = "Off"
    ENGAGED = "Engaged"
    ON = "On"
    DISENGAGED = "Disengaged"


class EventKind(str, Enum):
    DRIVER_ON = "DriverOn"
    DRIVER_CC_ON = "DriverCcOn"
    DRIVER_OFF = "DriverOff"
    DRIVER_STANDBY = "DriverStandby"
    BRAKE_SIGNAL = "BrakeSignal"
    CLUTCH_SIGNAL = "ClutchSignal"
    DRIVER_RESUME = "DriverResume"
    VEHICLE_OFF = "VehicleOff"


class Action(str, Enum):
    ACTUATOR_SIGNAL_ON = "ActuatorSignalOn"
    ACTUATOR_SIGNAL_OFF = "ActuatorSignalOff"
    CLEAR_MEMORY = "ClearMemory"
    NOTIFY_DRIVER = "NotifyDriver"
    NONE = "None"


DISENGAGING_EVENTS = frozenset(
    {EventKind.BRAKE_SIGNAL, EventKind.CLUTCH_SIGNAL, EventKind.DRIVER_OFF, EventKind.DRIVER_STANDBY}
)


@dataclass(frozen=True)
class CcState:
    mode: Mode = Mode.OFF
    stored_set_speed: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.mode is Mode.OFF and self.stored_set_speed is not None:
            raise ValueError("Off state cannot hold a stored set speed")
        if self.mode is Mode.ON and self.stored_set_speed is None:
            raise ValueError("On state requires a stored set speed")


@dataclass(frozen=True)
class CcEvent:
    kind: EventKind
    set_speed: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        if self.kind is EventKind.DRIVER_CC_ON:
            if self.set_speed is None or not self.set_speed > 0:
                raise ValueError("DriverCcOn requires a strictly positive set speed")
        elif self.set_speed is not None:
            raise ValueError(f"{self.kind.value} does not carry a set speed")

    @classmethod
    def cc_on(cls, set_speed: float) -> "CcEvent":
        return cls(EventKind.DRIVER_CC_ON, set_speed)


OFF = CcState()


def step(state: CcState, event: CcEvent) -> tuple[CcState, list[Action]]:
    """Apply one trigger. Unlisted (mode, event) pairs are self-loops emitting [None].

    Raises ResumeWithoutMemory for a resume from Disengaged with nothing stored.
    """
    mode, kind = state.mode, event.kind

    if kind is EventKind.VEHICLE_OFF:
        actions = [Action.ACTUATOR_SIGNAL_OFF] if mode is Mode.ON else []
        actions.append(Action.CLEAR_MEMORY)
        return OFF, actions

    if mode is Mode.OFF and kind is EventKind.DRIVER_ON:
        return CcState(Mode.ENGAGED), [Action.NONE]

    if mode is Mode.ENGAGED:
        if kind is EventKind.DRIVER_CC_ON:
            return CcState(Mode.ON, event.set_speed), [Action.ACTUATOR_SIGNAL_ON, Action.NOTIFY_DRIVER]
        if kind is EventKind.DRIVER_OFF:
            # reconstruction: the state diagram only shows Vehicle Off leaving Engaged
            return OFF, [Action.NONE]

    if mode is Mode.ON and kind in DISENGAGING_EVENTS:
        return CcState(Mode.DISENGAGED, state.stored_set_speed), [Action.ACTUATOR_SIGNAL_OFF]

    if mode is Mode.DISENGAGED:
        if kind is EventKind.DRIVER_RESUME:
            if state.stored_set_speed is None:
                raise ResumeWithoutMemory("cannot resume: no stored set speed")
            return CcState(Mode.ON, state.stored_set_speed), [Action.ACTUATOR_SIGNAL_ON]
        if kind is EventKind.DRIVER_CC_ON:
            return CcState(Mode.ON, event.set_speed), [Action.ACTUATOR_SIGNAL_ON]

    return state, [Action.NONE]


def is_safe_state(state: CcState | Mode | str) -> bool:
    if isinstance(state, CcState):
        mode = state.mode
    else:
        mode = mode_from_name(state)
    return mode in (Mode.DISENGAGED, Mode.OFF)


def mode_from_name(name: Mode | str) -> Mode:
    """Accept 'Disengaged', 'CC_Disengaged' or 'CC_ Disengaged' style names."""
    if isinstance(name, Mode):
        return name
    cleaned = name.strip()
    if cleaned.upper().startswith("CC_"):
        cleaned = cleaned[3:].strip()
    for m in Mode:
        if m.value.lower() == cleaned.lower():
            return m
    raise ValueError(f"unknown cruise control mode {name!r}")


# -- transition table export -------------------------------------------------

TABLE_HEADER = ("from_mode", "memory", "event", "to_mode", "memory_after", "actions")

# (mode, has stored speed) combinations that satisfy the CcState invariants
REACHABLE_CONTEXTS = (
    (Mode.OFF, False),
    (Mode.ENGAGED, False),
    (Mode.ON, True),
    (Mode.DISENGAGED, True),
    (Mode.DISENGAGED, False),
)

_PROBE_STORED = 10.0
_PROBE_EVENT = 20.0


def transition_rows() -> list[tuple[str, ...]]:
    """Enumerate every (context, event) pair symbolically.

    memory_after is one of absent / kept / event (taken from DriverCcOn).
    """
    rows = []
    for mode, has_mem in REACHABLE_CONTEXTS:
        state = CcState(mode, _PROBE_STORED if has_mem else None)
        for kind in EventKind:
            event = CcEvent.cc_on(_PROBE_EVENT) if kind is EventKind.DRIVER_CC_ON else CcEvent(kind)
            label = "DriverCcOn(v)" if kind is EventKind.DRIVER_CC_ON else kind.value
            try:
                new, actions = step(state, event)
            except ResumeWithoutMemory:
                rows.append((mode.value, _mem(has_mem), label, mode.value, _mem(has_mem), "error:ResumeWithoutMemory"))
                continue
            if new.stored_set_speed is None:
                after = "absent"
            elif new.stored_set_speed == _PROBE_EVENT:
                after = "event"
            else:
                after = "kept"
            rows.append((mode.value, _mem(has_mem), label, new.mode.value, after, "+".join(a.value for a in actions)))
    return rows


def _mem(has: bool) -> str:
    return "present" if has else "absent"


def transition_table_csv() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    writer.writerows(transition_rows())
    return buf.getvalue()
