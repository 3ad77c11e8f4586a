"""Regenerate the bundled monitor table and report how big it is and whether it stays quiet."""

import argparse
import itertools
import time
from pathlib import Path

from cruisesafe.safemon import Envelope, calibrate, save_table
from cruisesafe.simcore import cruise_scenario, simulate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--v-min", type=float, default=15.0)
    ap.add_argument("--v-max", type=float, default=35.0)
    ap.add_argument("--bin-width", type=float, default=5.0)
    ap.add_argument("--out", type=Path, default=Path("results/monitor_table.json"))
    args = ap.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    table = calibrate(Envelope(args.v_min, args.v_max, args.bin_width))
    save_table(table, args.out)
    print(f"{table.shape} table in {time.perf_counter() - t0:.1f} s, {args.out.stat().st_size / 1024:.0f} KiB")

    alarms = 0
    for v0, vs in itertools.product(table.v0_centers, table.vset_centers):
        tr = simulate(cruise_scenario(v0, vs, monitor_table=table))
        alarms += bool(tr.monitor_error.any())
    print(f"false alarms on the calibration grid: {alarms}")


if __name__ == "__main__":
    main()
