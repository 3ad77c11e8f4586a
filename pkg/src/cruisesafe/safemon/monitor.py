"""Deviation detection on the commanded CC throttle rate."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

from ..ccstate import Action, CcState, Mode
from ..errors import OutOfEnvelope
from .table import MonitorTable


@dataclass(frozen=True)
class MonitorState:
    latched_error: bool = False
    consecutive_deviation_steps: int = 0
    last_throttle: float = 0.0
    reason: str = ""


@dataclass(frozen=True)
class MonitorContext:
    v0: float  # measured speed at engagement
    v_set: float
    step: int  # steps since engagement


class RateEstimator:
    """Throttle rate as (u[k] - u[k-W]) / (W*dt); samples before engagement count as 0."""

    def __init__(self, window: int, dt: float):
        self.window = window
        self.dt = dt
        self.reset()

    def reset(self) -> None:
        self.buf = deque([0.0] * (self.window + 1), maxlen=self.window + 1)

    def push(self, u: float) -> float:
        self.buf.append(u)
        return (self.buf[-1] - self.buf[0]) / (self.window * self.dt)


def monitor_step(state: MonitorState, observed_rate: float, context: MonitorContext,
                 table: MonitorTable) -> tuple[MonitorState, bool]:
    """Compare one observed rate with the table. Returns (new state, error).

    A context outside the calibrated grid latches immediately (fail-safe).
    """
    if state.latched_error:
        return state, True
    try:
        i, j = table.bins(context.v0, context.v_set)
    except OutOfEnvelope as exc:
        return replace(state, latched_error=True, reason=f"out_of_envelope: {exc}"), True
    expected = table.expected(i, j, context.step)
    if abs(observed_rate - expected) > table.tolerance(expected):
        count = state.consecutive_deviation_steps + 1
    else:
        count = 0
    if count >= table.config.debounce_steps:
        return replace(state, latched_error=True, consecutive_deviation_steps=count, reason="rate_deviation"), True
    return replace(state, consecutive_deviation_steps=count), False


def enforce_safe_state(error: bool, cc: CcState) -> tuple[CcState, list[Action]]:
    if error and cc.mode is Mode.ON:
        return CcState(Mode.DISENGAGED, cc.stored_set_speed), [Action.ACTUATOR_SIGNAL_OFF, Action.NOTIFY_DRIVER]
    return cc, []


class Monitor:
    """Per-simulation wrapper: tracks engagement context and the rate window."""

    def __init__(self, table: MonitorTable, dt: float):
        self.table = table
        self.rates = RateEstimator(table.config.rate_window_steps, dt)
        self.state = MonitorState()
        self.context: MonitorContext | None = None

    @property
    def latched(self) -> bool:
        return self.state.latched_error

    def engage(self, v0: float, v_set: float, fresh: bool) -> None:
        if fresh:
            self.state = MonitorState()
        self.rates.reset()
        self.context = MonitorContext(v0, v_set, 0)

    def observe(self, throttle: float, suppressed: bool = False) -> bool:
        rate = self.rates.push(throttle)
        ctx = self.context
        if suppressed:
            self.state = replace(self.state, consecutive_deviation_steps=0, last_throttle=throttle)
            error = self.state.latched_error
        else:
            self.state, error = monitor_step(self.state, rate, ctx, self.table)
            self.state = replace(self.state, last_throttle=throttle)
        self.context = replace(ctx, step=ctx.step + 1)
        return error
