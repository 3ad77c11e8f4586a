"""Map a simulation trace to one of the six hazard categories (or None)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..hara import Hazard
from ..simcore import Trace


class HazardLabel(str, Enum):
    UNINTENDED_ACCELERATION = "UnintendedAcceleration"
    UNINTENDED_DECELERATION = "UnintendedDeceleration"
    UNINTENDED_MOVEMENT = "UnintendedMovement"
    REDUCED_MOVEMENT = "ReducedMovement"
    DANGEROUS_MOVEMENT = "DangerousMovement"
    UNINTENDED_REACTION = "UnintendedReaction"
    NONE = "None"

    @property
    def hazard(self) -> Hazard | None:
        return None if self is HazardLabel.NONE else Hazard(self.value)


@dataclass(frozen=True)
class Thresholds:
    band: float = 2.0  # m/s around the set speed
    dwell: float = 1.0  # s
    reduced_band: float = 0.5  # m/s shortfall for ReducedMovement
    pinned_eps: float = 1e-9
    osc_amplitude: float = 0.2
    osc_sign_changes_per_s: float = 3.0
    osc_window: float = 1.0  # s
    osc_dwell: float = 2.0  # s
    movement_eps: float = 1e-6
    movement_min_steps: int = 1
    # speed-band rules only count after v_actual first entered the band
    # following an engagement, so a normal ramp to the set speed is not a hazard
    require_capture: bool = True

    @classmethod
    def from_dict(cls, d: dict | None) -> "Thresholds":
        return cls(**(d or {}))


PRIORITY = (
    HazardLabel.DANGEROUS_MOVEMENT,
    HazardLabel.UNINTENDED_ACCELERATION,
    HazardLabel.UNINTENDED_DECELERATION,
    HazardLabel.REDUCED_MOVEMENT,
    HazardLabel.UNINTENDED_MOVEMENT,
    HazardLabel.UNINTENDED_REACTION,
)


def _longest_run(mask: np.ndarray) -> int:
    best = run = 0
    for m in mask:
        run = run + 1 if m else 0
        if run > best:
            best = run
    return best


def _steps(seconds: float, dt: float) -> int:
    return max(1, int(round(seconds / dt)))


def _captured(trace: Trace, on: np.ndarray, band: float) -> np.ndarray:
    out = np.zeros(len(trace), dtype=bool)
    captured = False
    prev_on, prev_set = False, None
    for k in range(len(trace)):
        if not on[k]:
            captured, prev_on = False, False
            continue
        vs = trace.v_set[k]
        if not prev_on or vs != prev_set:
            captured = False
        if abs(trace.v_actual[k] - vs) <= band:
            captured = True
        out[k] = captured
        prev_on, prev_set = True, vs
    return out


def rule_hits(trace: Trace, th: Thresholds = Thresholds()) -> dict[HazardLabel, bool]:
    """Evaluate every rule independently."""
    dt = trace.dt
    on = np.array([m == "On" for m in trace.cc_mode])
    gate = _captured(trace, on, th.band) if th.require_capture else on
    with np.errstate(invalid="ignore"):
        over = gate & (trace.v_actual > trace.v_set + th.band)
        under = gate & (trace.v_actual < trace.v_set - th.band)
        short = gate & (trace.v_actual < trace.v_set - th.reduced_band) & (trace.throttle_cc <= th.pinned_eps)
    dwell = _steps(th.dwell, dt)

    hits = {
        HazardLabel.UNINTENDED_ACCELERATION: _longest_run(over) >= dwell,
        HazardLabel.UNINTENDED_DECELERATION: _longest_run(under) >= dwell,
        HazardLabel.REDUCED_MOVEMENT: _longest_run(short) >= dwell,
        HazardLabel.UNINTENDED_MOVEMENT:
            _longest_run(~on & (trace.throttle_cc > th.movement_eps)) >= th.movement_min_steps,
        HazardLabel.DANGEROUS_MOVEMENT: _oscillating(trace.throttle_cc, dt, th),
        HazardLabel.UNINTENDED_REACTION:
            trace.mode_changes is not None and any(c.cause is None for c in trace.mode_changes),
    }
    return hits


def _oscillating(u: np.ndarray, dt: float, th: Thresholds) -> bool:
    w = _steps(th.osc_window, dt)
    if len(u) < w + 1:
        return False
    sign = np.sign(np.diff(u))
    # carry the last nonzero slope through flat segments
    nz = np.where(sign != 0, np.arange(len(sign)), 0)
    np.maximum.accumulate(nz, out=nz)
    held = sign[nz]
    changes = np.zeros(len(u), dtype=int)
    changes[2:] = (held[1:] * held[:-1] < 0)
    csum = np.concatenate(([0], np.cumsum(changes)))
    count = csum[w:] - csum[:-w]  # sign changes in each window ending at index w-1..
    span = sliding_window_view(u, w)
    amp = span.max(axis=1) - span.min(axis=1)
    cond = (amp > th.osc_amplitude) & (count >= th.osc_sign_changes_per_s * th.osc_window)
    return _longest_run(cond) >= _steps(th.osc_dwell, dt)


def classify_trace(trace: Trace, thresholds: Thresholds = Thresholds()) -> HazardLabel:
    hits = rule_hits(trace, thresholds)
    for label in PRIORITY:
        if hits[label]:
            return label
    return HazardLabel.NONE
