"""Speed-feedback offset fault at settled cruise, with and without the monitor.

Writes one CSV trace and one PNG per run into --out (default: results/fault_injection).

    python3 scripts/run_fault_injection.py --offset -5 --offset 5
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from cruisesafe.safemon import load_table
from cruisesafe.simcore import cruise_scenario, simulate, speed_offset
from cruisesafe.workbench import classify_trace
from cruisesafe.workbench.campaign import fixture_path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--offset", type=float, action="append", help="feedback offset in m/s (repeatable)")
    ap.add_argument("--set-speed", type=float, default=25.0)
    ap.add_argument("--fault-start", type=float, default=60.0)
    ap.add_argument("--duration", type=float, default=120.0)
    ap.add_argument("--out", type=Path, default=Path("results/fault_injection"))
    args = ap.parse_args()
    offsets = args.offset or [-5.0]
    args.out.mkdir(parents=True, exist_ok=True)
    table = load_table(fixture_path("monitor_table.json"))

    fig, axes = plt.subplots(len(offsets), 1, sharex=True, figsize=(8, 3.2 * len(offsets)), squeeze=False)
    for ax, b in zip(axes[:, 0], offsets):
        for monitored in (False, True):
            sc = cruise_scenario(args.set_speed, args.set_speed, duration=args.duration,
                                 faults=[speed_offset(b, args.fault_start, args.duration)],
                                 monitor_table=table if monitored else None,
                                 scenario_id=f"offset_{b:+g}_{'monitor' if monitored else 'plain'}")
            tr = simulate(sc)
            tr.write_csv(args.out / f"{sc.id}.csv")
            label = classify_trace(tr).value
            tail = f", latched at {tr.error_time:.2f} s" if tr.error_time is not None else ""
            print(f"{sc.id}: settled {tr.settled_speed():.3f} m/s, label {label}{tail}")
            ax.plot(tr.t, tr.v_actual, label=f"{'with' if monitored else 'without'} monitor ({label})")
        ax.axhline(args.set_speed, color="k", ls="--", lw=0.8)
        ax.axvline(args.fault_start, color="r", lw=0.8)
        ax.set_title(f"speed feedback offset {b:+g} m/s")
        ax.set_ylabel("speed [m/s]")
        ax.legend(loc="best", fontsize=8)
    axes[-1, 0].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(args.out / "speed_vs_time.png", dpi=120)
    print(f"plot -> {args.out / 'speed_vs_time.png'}")


if __name__ == "__main__":
    main()
