"""Calibrated lookup table of expected CC throttle rates."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import OutOfEnvelope, ParseError, TableMismatch
from ..simcore import ControllerParams, PlantParams


@dataclass(frozen=True)
class MonitorConfig:
    rate_window_steps: int = 50  # throttle rate = difference over this many steps
    debounce_steps: int = 20
    abs_floor: float = 0.02  # 1/s
    rel_frac: float = 0.2

    def __post_init__(self):
        if self.rate_window_steps < 1 or self.debounce_steps < 1:
            raise ValueError("rate window and debounce must be >= 1 step")
        if not self.abs_floor > 0 or self.rel_frac < 0:
            raise ValueError("tolerance must be strictly positive")


@dataclass
class MonitorTable:
    """Expected windowed throttle rate per (engagement speed bin, set speed bin),
    indexed by steps since engagement. Past the stored horizon the expected
    rate is 0 (settled cruise)."""

    v0_centers: tuple[float, ...]
    vset_centers: tuple[float, ...]
    bin_width: float
    profiles: dict[tuple[int, int], np.ndarray]
    config: MonitorConfig = field(default_factory=MonitorConfig)
    plant: PlantParams = field(default_factory=PlantParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    dt: float = 0.01

    def __post_init__(self):
        for i in range(len(self.v0_centers)):
            for j in range(len(self.vset_centers)):
                if (i, j) not in self.profiles:
                    raise ValueError(f"table has a gap at bin ({i}, {j})")
                if not np.all(np.isfinite(self.profiles[(i, j)])):
                    raise ValueError(f"non-finite profile at bin ({i}, {j})")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.v0_centers), len(self.vset_centers)

    def _bin(self, speed: float, centers: tuple[float, ...], what: str) -> int:
        half = self.bin_width / 2
        for i, c in enumerate(centers):
            if c - half <= speed < c + half:
                return i
        raise OutOfEnvelope(f"{what} {speed:.3f} m/s outside calibrated envelope "
                            f"[{centers[0] - half:g}, {centers[-1] + half:g})")

    def bins(self, v0: float, v_set: float) -> tuple[int, int]:
        return self._bin(v0, self.v0_centers, "engagement speed"), self._bin(v_set, self.vset_centers, "set speed")

    def expected(self, i: int, j: int, step: int) -> float:
        prof = self.profiles[(i, j)]
        return float(prof[step]) if step < len(prof) else 0.0

    def tolerance(self, expected: float) -> float:
        return max(self.config.abs_floor, self.config.rel_frac * abs(expected))

    def check_params(self, plant: PlantParams, controller: ControllerParams, dt: float) -> None:
        if plant != self.plant or controller != self.controller or not math.isclose(dt, self.dt, rel_tol=1e-12):
            raise TableMismatch("monitor table was calibrated for different plant/controller/dt parameters")


# profile values are rounded on save; tolerances are >= 0.02 1/s so 1e-6 is negligible
_DECIMALS = 6


def table_to_dict(table: MonitorTable) -> dict:
    return {
        "format": "cruisesafe-monitor-table",
        "version": 1,
        "metadata": {
            "plant": asdict(table.plant),
            "controller": asdict(table.controller),
            "dt": table.dt,
            "config": asdict(table.config),
        },
        "bin_width": table.bin_width,
        "v0_centers": list(table.v0_centers),
        "vset_centers": list(table.vset_centers),
        "profiles": [
            {"v0_bin": i, "vset_bin": j, "rates": [round(float(x), _DECIMALS) for x in table.profiles[(i, j)]]}
            for (i, j) in sorted(table.profiles)
        ],
    }


def table_from_dict(doc: dict) -> MonitorTable:
    try:
        meta = doc["metadata"]
        profiles = {(int(p["v0_bin"]), int(p["vset_bin"])): np.asarray(p["rates"], dtype=float)
                    for p in doc["profiles"]}
        return MonitorTable(
            v0_centers=tuple(float(x) for x in doc["v0_centers"]),
            vset_centers=tuple(float(x) for x in doc["vset_centers"]),
            bin_width=float(doc["bin_width"]),
            profiles=profiles,
            config=MonitorConfig(**meta["config"]),
            plant=PlantParams(**meta["plant"]),
            controller=ControllerParams(**meta["controller"]),
            dt=float(meta["dt"]),
        )
    except KeyError as exc:
        raise ParseError("missing required field", field=str(exc.args[0])) from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def save_table(table: MonitorTable, path: str | Path) -> None:
    # one profile per line keeps the file diffable
    doc = table_to_dict(table)
    profiles = doc.pop("profiles")
    head = json.dumps(doc, indent=2)[:-2]
    lines = ",\n    ".join(json.dumps(p, separators=(",", ":")) for p in profiles)
    Path(path).write_text(f'{head},\n  "profiles": [\n    {lines}\n  ]\n}}\n', encoding="utf-8")


def load_table(path: str | Path, plant: PlantParams | None = None,
               controller: ControllerParams | None = None, dt: float | None = None) -> MonitorTable:
    """Load a table; when active params are given, refuse a mismatching table."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    table = table_from_dict(doc)
    if plant is not None or controller is not None or dt is not None:
        table.check_params(plant or PlantParams(), controller or ControllerParams(),
                           table.dt if dt is None else dt)
    return table
