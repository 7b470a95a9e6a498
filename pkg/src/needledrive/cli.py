"""Command-line entry point.

Subcommands:

* run         — execute a scenario file's experiments and write a report
* drift       — one spiral-drift experiment, printed
* speed-table — nut speeds for the five stock pulley options
* serve       — run the telemetry service for the operator console

Exit codes: 0 success, 2 usage (bad flags or a missing file path),
3 invalid configuration content, 4 experiment or runtime failure.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path

from .config import ConfigError, DriftExperiment, ScenarioConfig, load_scenario
from .constants import MOTOR_RATED_RPM, MOTOR_REAL_RPM
from .drivetrain import MAX_MISMATCH
from .experiments import (
    ReportFormat,
    TrialFailure,
    emit_report,
    run_accuracy_trials,
    run_drift_experiment,
    speed_table,
)
from .simulate import NeedleDriverSim, SimConfig
from .telemetry import DEFAULT_PORT, TelemetryService

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_FAILURE = 4

DRIFT_CSV_FIELDS = (
    "revolutions,epsilon,pid,total_rotation_deg,insertion_drift_mm,drift_per_rev_mm"
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="needledrive",
        description="Differential screw/spline needle driver simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario and write a report")
    run_p.add_argument("--config", required=True, help="scenario JSON file")
    run_p.add_argument("--out", required=True, help="report output path")
    run_p.add_argument("--format", choices=["csv", "json"], default="csv")

    drift_p = sub.add_parser("drift", help="run one spiral-drift experiment")
    drift_p.add_argument("--epsilon", type=float, default=0.015,
                         help="relative speed mismatch of the insertion motor")
    drift_p.add_argument("--revs", type=int, default=7,
                         help="shaft revolutions to command")
    drift_p.add_argument("--pid", action="store_true",
                         help="enable the PID speed compensation")

    table_p = sub.add_parser(
        "speed-table", help="print nut speeds for the five pulley options"
    )
    table_p.add_argument("--input-rpm", type=float, default=None,
                         help="print a single column for this motor speed "
                              "(default: rated and real columns)")

    serve_p = sub.add_parser("serve", help="run the telemetry service")
    serve_p.add_argument("--port", type=int, default=DEFAULT_PORT)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--config", default=None, help="optional scenario JSON file")

    return parser


def _fmt(x: float) -> str:
    return f"{x:g}"


def _execute_scenario(scenario: ScenarioConfig) -> tuple[list, list]:
    accuracy = []
    drifts = []
    for i, exp in enumerate(scenario.experiments):
        if isinstance(exp, DriftExperiment):
            result = run_drift_experiment(
                exp.revolutions, exp.epsilon,
                scenario.sim_config(pid_enabled=exp.pid),
            )
            drifts.append((exp, result))
        else:
            stats = run_accuracy_trials(
                exp.trial(), scenario.experiment_noise(i), scenario.sim_config()
            )
            accuracy.append(stats)
    return accuracy, drifts


def _render_report(scenario: ScenarioConfig, accuracy, drifts, fmt: str) -> str:
    if fmt == "json":
        import json

        doc = {
            "version": 1,
            "seed": scenario.seed,
            "accuracy": [
                {
                    "target": s.target,
                    "mean_error": s.mean_error,
                    "std_dev": s.std_dev,
                    "n": s.n,
                    "samples": list(s.samples),
                }
                for s in accuracy
            ],
            "drift": [
                {
                    "revolutions": exp.revolutions,
                    "epsilon": exp.epsilon,
                    "pid": exp.pid,
                    "total_rotation_deg": res.total_rotation,
                    "insertion_drift_mm": res.insertion_drift,
                    "drift_per_rev_mm": res.drift_per_rev,
                }
                for exp, res in drifts
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    parts = []
    if accuracy:
        parts.append("# accuracy\n" + emit_report(accuracy, ReportFormat.CSV))
    if drifts:
        lines = [DRIFT_CSV_FIELDS]
        for exp, res in drifts:
            lines.append(
                f"{exp.revolutions},{exp.epsilon!r},{exp.pid},"
                f"{res.total_rotation!r},{res.insertion_drift!r},{res.drift_per_rev!r}"
            )
        parts.append("# drift\n" + "\n".join(lines) + "\n")
    return "".join(parts)


def cmd_run(args: argparse.Namespace) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return EXIT_USAGE
    try:
        scenario = load_scenario(path)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        accuracy, drifts = _execute_scenario(scenario)
    except TrialFailure as exc:
        print(f"error: experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    Path(args.out).write_text(_render_report(scenario, accuracy, drifts, args.format))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_drift(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not abs(args.epsilon) < MAX_MISMATCH:
        parser.error(f"--epsilon must satisfy |epsilon| < {MAX_MISMATCH}")
    if args.revs < 1:
        parser.error("--revs must be >= 1")
    cfg = SimConfig()
    if args.pid:
        from dataclasses import replace

        cfg.controller = replace(cfg.controller, pid_enabled=True)
    try:
        result = run_drift_experiment(args.revs, args.epsilon, cfg)
    except TrialFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"commanded rotation:  {360.0 * args.revs:g} deg ({args.revs} revolutions)")
    print(f"achieved rotation:   {result.total_rotation:.3f} deg")
    print(f"insertion drift:     {result.insertion_drift:.4f} mm")
    print(f"drift per revolution: {result.drift_per_rev:.4f} mm/rev")
    return EXIT_OK


def cmd_speed_table(args: argparse.Namespace) -> int:
    if args.input_rpm is not None:
        column = speed_table(args.input_rpm)
        print(f"{'Pulley':<16} {'Output (rpm)':>12}")
        for name, rpm in column.items():
            print(f"{name:<16} {_fmt(rpm):>12}")
        return EXIT_OK
    rated = speed_table(MOTOR_RATED_RPM)
    real = speed_table(MOTOR_REAL_RPM)
    print(
        f"{'Pulley':<16} {'Rated out (rpm) @' + _fmt(MOTOR_RATED_RPM):>20} "
        f"{'Real out (rpm) @' + _fmt(MOTOR_REAL_RPM):>20}"
    )
    for name in rated:
        print(f"{name:<16} {_fmt(rated[name]):>20} {_fmt(real[name]):>20}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not 0 <= args.port <= 65535:
        parser.error(f"--port must be in [0, 65535], got {args.port}")
    sim = None
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            print(f"error: config file not found: {path}", file=sys.stderr)
            return EXIT_USAGE
        try:
            scenario = load_scenario(path)
        except ConfigError as exc:
            print(f"error: invalid config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sim = NeedleDriverSim(scenario.sim_config())
    service = TelemetryService(sim, host=args.host, port=args.port)

    async def announce_and_serve() -> None:
        ready = asyncio.Event()
        server = asyncio.create_task(service.serve_forever(ready))
        ready_wait = asyncio.create_task(ready.wait())
        done, _ = await asyncio.wait(
            {server, ready_wait}, return_when=asyncio.FIRST_COMPLETED
        )
        if server in done:  # died before binding; surface the error
            ready_wait.cancel()
            await server
            return
        print(f"telemetry service listening on ws://{args.host}:{service.bound_port}",
              flush=True)
        await server

    try:
        asyncio.run(announce_and_serve())
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "drift":
        return cmd_drift(args, parser)
    if args.command == "speed-table":
        return cmd_speed_table(args)
    if args.command == "serve":
        return cmd_serve(args, parser)
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
