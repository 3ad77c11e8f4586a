"""Build the monitor lookup table from fault-free reference runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CalibrationDiverged
from ..simcore import ControllerParams, PlantParams, cruise_scenario, simulate
from .monitor import RateEstimator
from .table import MonitorConfig, MonitorTable


@dataclass(frozen=True)
class Envelope:
    v_min: float
    v_max: float
    bin_width: float

    def centers(self) -> tuple[float, ...]:
        if not (self.bin_width > 0 and self.v_max >= self.v_min > 0):
            raise ValueError("envelope must be non-empty with positive speeds and bin width")
        n = int(np.floor((self.v_max - self.v_min) / self.bin_width + 1e-9)) + 1
        return tuple(float(self.v_min + i * self.bin_width) for i in range(n))


def replay_rates(throttle: np.ndarray, config: MonitorConfig, dt: float) -> np.ndarray:
    est = RateEstimator(config.rate_window_steps, dt)
    return np.array([est.push(float(u)) for u in throttle])


def calibrate(envelope: Envelope, plant: PlantParams | None = None, controller: ControllerParams | None = None,
              dt: float = 0.01, config: MonitorConfig | None = None, duration: float = 120.0,
              settle_band: float = 0.25, tail_eps: float = 1e-3) -> MonitorTable:
    """Run one fault-free engagement per (v0, v_set) grid point and record the
    throttle-rate profile the monitor would observe.

    Each profile is trimmed after its last sample with |rate| >= tail_eps.
    """
    plant = plant or PlantParams()
    controller = controller or ControllerParams()
    config = config or MonitorConfig()
    centers = envelope.centers()
    profiles = {}
    for i, v0 in enumerate(centers):
        for j, vs in enumerate(centers):
            trace = simulate(cruise_scenario(v0, vs, duration=duration, plant=plant, controller=controller, dt=dt))
            settled = trace.settled_speed(5.0)
            if not abs(settled - vs) < settle_band or not np.all(np.isfinite(trace.v_actual)):
                raise CalibrationDiverged(f"reference run v0={v0:g} v_set={vs:g} settled at {settled:.3f} m/s")
            rates = replay_rates(trace.throttle_cc, config, dt)
            big = np.nonzero(np.abs(rates) >= tail_eps)[0]
            profiles[(i, j)] = rates[: big[-1] + 1] if len(big) else rates[:1]
    return MonitorTable(centers, centers, envelope.bin_width, profiles, config, plant, controller, dt)
