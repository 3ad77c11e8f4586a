"""Command line entry point: ``cruisesafe <subcommand> ...``.

Failures exit non-zero and write one JSON error record to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import ccstate, funcmodel
from .errors import CruiseSafeError, ParseError
from .hara import load_hara, run_hara
from .simcore import ControllerParams, PlantParams, Trace, load_scenario, simulate

EXIT_FAIL = 1
EXIT_ERROR = 2


def cmd_validate(args) -> int:
    model = funcmodel.load_model(args.model)
    violations = funcmodel.validate_traceability(model)
    goals = [r.id for r in model.requirements if r.category is funcmodel.Category.SAFETY_GOAL]
    chain = [v for g in goals for v in funcmodel.check_safety_chain(model, g)]
    for v in violations + chain:
        print(json.dumps(v.record()))
    print(f"{len(model.components)} components, {len(model.requirements)} requirements, "
          f"{len(violations)} traceability violations, {len(chain)} safety-chain violations", file=sys.stderr)
    return 0 if not violations and not chain else EXIT_FAIL


def cmd_hara(args) -> int:
    fx = load_hara(args.fixture)
    result = run_hara(fx)
    expected = fx.expected_asils
    print(f"{'goal':<6} {'ASIL':<4} {'safe state':<14} text")
    ok = True
    for g in result.goals:
        mark = ""
        if g.id in expected and expected[g.id] != g.asil:
            ok = False
            mark = f"  [expected {expected[g.id].name}]"
        print(f"{g.id:<6} {g.asil.name:<4} {g.safe_state:<14} {g.text}{mark}")
    if args.json:
        Path(args.json).write_text(json.dumps(result.report_records(), indent=2) + "\n", encoding="utf-8")
    missing = set(expected) - {g.id for g in result.goals}
    return 0 if ok and not missing else EXIT_FAIL


def cmd_simulate(args) -> int:
    table = None
    if args.table:
        from .safemon import load_table
        table = load_table(args.table)
    scenario = load_scenario(args.scenario, monitor_table=table)
    if table is not None:
        table.check_params(scenario.plant, scenario.controller, scenario.dt)
    trace = simulate(scenario)
    trace.write_csv(args.out)
    print(f"{len(trace)} steps -> {args.out}; settled speed {trace.settled_speed():.3f} m/s; "
          f"final mode {trace.cc_mode[-1]}", file=sys.stderr)
    return 0


def cmd_calibrate(args) -> int:
    from .safemon import Envelope, MonitorConfig, calibrate, save_table
    try:
        doc = json.loads(Path(args.envelope).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    try:
        env = Envelope(float(doc["v_min"]), float(doc["v_max"]), float(doc["bin_width"]))
        env.centers()
        table = calibrate(
            env,
            plant=PlantParams(**doc.get("plant", {})),
            controller=ControllerParams(**doc.get("controller", {})),
            dt=float(doc.get("dt", 0.01)),
            config=MonitorConfig(**doc.get("config", {})),
            duration=float(doc.get("duration", 120.0)),
        )
    except KeyError as exc:
        raise ParseError("missing required field", field=str(exc.args[0])) from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
    save_table(table, args.out)
    print(f"{table.shape[0]}x{table.shape[1]} table -> {args.out}", file=sys.stderr)
    return 0


def cmd_campaign(args) -> int:
    from .workbench import load_campaign, run_campaign, write_report
    campaign = load_campaign(args.campaign)
    report = run_campaign(campaign, workers=args.workers)
    write_report(report, args.report)
    for s in report["scenarios"]:
        latency = "" if s["detection_latency"] is None else f" latency={s['detection_latency']:.2f}s"
        print(f"{s['id']}: {s['label']} violated={s['violated_goals']} protected={s['protected_goals']}{latency}",
              file=sys.stderr)
    return 0


def cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    trace = Trace.from_csv(Path(args.csv).read_text(encoding="utf-8"))
    fig, (ax, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 5), gridspec_kw={"height_ratios": [3, 1]})
    ax.plot(trace.t, trace.v_actual, label="vehicle speed")
    ax.plot(trace.t, trace.v_measured, lw=0.8, ls=":", label="speed feedback")
    ax.plot(trace.t, trace.v_set, ls="--", color="k", label="set speed")
    if trace.fault_active.any():
        t0 = trace.t[trace.fault_active.argmax()]
        ax.axvline(t0, color="r", lw=0.8, label="fault injected")
    ax.set_ylabel("speed [m/s]")
    ax.legend(loc="best")
    ax2.plot(trace.t, trace.throttle_cc, label="CC throttle")
    ax2.plot(trace.t, trace.throttle_driver, label="driver throttle")
    ax2.set_xlabel("time [s]")
    ax2.set_ylabel("throttle")
    ax2.legend(loc="best")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    plt.close(fig)
    return 0


def cmd_export_statemachine(args) -> int:
    text = ccstate.transition_table_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cruisesafe", description="Cruise control functional-safety workbench")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a functional model for traceability gaps")
    s.add_argument("model")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("hara", help="run the HARA fixture and print the safety goals")
    s.add_argument("fixture")
    s.add_argument("--json", help="also write the goal records to this file")
    s.set_defaults(func=cmd_hara)

    s = sub.add_parser("simulate", help="simulate one scenario to a CSV trace")
    s.add_argument("scenario")
    s.add_argument("--out", required=True)
    s.add_argument("--table", help="monitor table (overrides the scenario's)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("calibrate", help="build a monitor lookup table")
    s.add_argument("envelope")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("campaign", help="run a scenario campaign and write a report")
    s.add_argument("campaign")
    s.add_argument("--report", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_campaign)

    s = sub.add_parser("plot", help="speed-vs-time plot of a CSV trace")
    s.add_argument("csv")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("export-statemachine", help="write the transition table as CSV")
    s.add_argument("--out")
    s.set_defaults(func=cmd_export_statemachine)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CruiseSafeError as exc:
        print(json.dumps(exc.record()), file=sys.stderr)
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFound", "message": str(exc)}), file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
