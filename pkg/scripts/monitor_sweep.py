"""Detection latency over a sweep of offset magnitudes and fault times,
plus a check of how the monitor behaves for engagements between grid points."""

import argparse

from cruisesafe.safemon import load_table
from cruisesafe.simcore import cruise_scenario, simulate, speed_offset
from cruisesafe.workbench.campaign import fixture_path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--set-speed", type=float, default=25.0)
    args = ap.parse_args()
    table = load_table(fixture_path("monitor_table.json"))

    print("offset [m/s]  fault at [s]  latency [s]")
    for b in (-10, -5, -2, -1, -0.5, 0.5, 1, 2, 5, 10):
        for start in (30.0, 60.0, 90.0):
            tr = simulate(cruise_scenario(args.set_speed, args.set_speed, faults=[speed_offset(b, start, 120.0)],
                                          monitor_table=table))
            lat = "missed" if tr.error_time is None else f"{tr.error_time - start:.2f}"
            print(f"{b:>12g}  {start:>12g}  {lat:>11}")

    print("\noff-grid fault-free engagements (v0, v_set) -> monitor error time")
    for v0, vs in ((22.0, 25.0), (25.0, 27.0), (17.5, 32.5), (30.0, 21.0)):
        tr = simulate(cruise_scenario(v0, vs, monitor_table=table))
        print(f"({v0:g}, {vs:g}) -> {tr.error_time}")


if __name__ == "__main__":
    main()
