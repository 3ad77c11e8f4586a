"""Runtime safety mechanism: lookup table of expected actuation rates,
deviation detection with debounce and latch, and forced safe state."""

from .calibrate import Envelope, calibrate
from .monitor import (
    Monitor,
    MonitorContext,
    MonitorState,
    RateEstimator,
    enforce_safe_state,
    monitor_step,
)
from .table import MonitorConfig, MonitorTable, load_table, save_table

__all__ = [
    "Envelope", "calibrate", "Monitor", "MonitorContext", "MonitorState", "RateEstimator",
    "enforce_safe_state", "monitor_step", "MonitorConfig", "MonitorTable", "load_table", "save_table",
]
