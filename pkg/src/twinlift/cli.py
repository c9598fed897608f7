"""Command-line entry point: simulate, serve, latency-report, pick-and-place.

Exit codes: 0 success, 2 configuration error, 3 runtime/divergence error,
4 estimator error. TWINLIFT_LOG sets the logging level.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from pathlib import Path

from .avatar import fidelity_report, write_paired_csv
from .delay import InsufficientExcitationError, estimate_delay
from .dynamics import SimulationDiverged
from .protocol import read_capture
from .scenario import (BridgeSettings, Scenario, ScenarioError, load_scenario,
                       write_scenario)
from .serve import PortInUseError, ServeSession
from .sim import pick_and_place_scenario, run_scenario, summarize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_ESTIMATOR = 4


def _setup_logging() -> None:
    level = os.environ.get("TWINLIFT_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _write_summary(out_dir: Path, summary: dict) -> None:
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")


def _cmd_simulate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        log = run_scenario(scenario.sim)
    except SimulationDiverged as exc:
        print(json.dumps({"error": "diverged", "detail": str(exc), "t": exc.t}),
              file=sys.stderr)
        return EXIT_RUNTIME
    log.write_csv(out_dir / "log.csv")
    summary = summarize(log)
    _write_summary(out_dir, summary)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_pick_and_place(args) -> int:
    config = pick_and_place_scenario()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.write_scenario:
        write_scenario(args.write_scenario, Scenario(sim=config, bridge=BridgeSettings()))
    try:
        log = run_scenario(config)
    except SimulationDiverged as exc:
        print(json.dumps({"error": "diverged", "detail": str(exc), "t": exc.t}),
              file=sys.stderr)
        return EXIT_RUNTIME
    log.write_csv(out_dir / "log.csv")
    summary = summarize(log)
    _write_summary(out_dir, summary)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_serve(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    capture = args.capture == "on"
    if capture:
        out_dir.mkdir(parents=True, exist_ok=True)
    session = ServeSession(scenario, port=args.port,
                           realtime=(args.realtime == "on"), capture=capture,
                           delay_s=args.delay, jitter_s=args.jitter, seed=args.seed)
    try:
        asyncio.run(session.run(stop_after=args.stop_after))
    except PortInUseError as exc:
        print(f"bridge error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        pass
    finally:
        if capture:
            session.write_captures(out_dir / "robot_capture.jsonl",
                                   out_dir / "avatar_capture.jsonl")
            print(f"captures flushed to {out_dir}", file=sys.stderr)
    return EXIT_OK


def _cmd_latency_report(args) -> int:
    try:
        robot = read_capture(args.robot_capture)
        avatar = read_capture(args.avatar_capture)
    except OSError as exc:
        print(f"capture error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        estimate = estimate_delay(robot, avatar)
        report = fidelity_report(robot, avatar, estimate)
    except InsufficientExcitationError as exc:
        print(f"estimator error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except ValueError as exc:
        print(f"estimator error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    write_paired_csv(out_dir / "paired_trace.csv", robot, avatar)
    with open(out_dir / "fidelity.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    print("one-way delay (cross-correlation): %.4f s" % estimate.lag_xcorr_s)
    if estimate.mean_owd_s is not None:
        print("one-way delay (stamps): mean %.4f s, p95 %.4f s over %d frames"
              % (estimate.mean_owd_s, estimate.p95_owd_s, estimate.matched_frames))
        print("estimator disagreement: %.4f s" % estimate.disagreement_s)
    print("residual tracking error after alignment: mean %.4f m, max %.4f m"
          % (report.mean_error_m, report.max_error_m))
    print("loss: %d frames, staleness: %.2f%%"
          % (report.loss_count, 100.0 * report.staleness_fraction))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinlift",
        description="Aerial-manipulator digital twin: simulator, bridge, cockpit backend.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario headless, write CSV + summary")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_pp = sub.add_parser("pick-and-place", help="run the canned pick-and-place tape")
    p_pp.add_argument("--out", required=True)
    p_pp.add_argument("--write-scenario", default=None,
                      help="also write the preset as a scenario file")
    p_pp.set_defaults(func=_cmd_pick_and_place)

    p_serve = sub.add_parser("serve", help="run simulator + bridge for live clients")
    p_serve.add_argument("--scenario", required=True)
    p_serve.add_argument("--out", default="out")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--delay", type=float, default=None,
                         help="injected one-way delay on /servo and /data (s)")
    p_serve.add_argument("--jitter", type=float, default=None)
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.add_argument("--realtime", choices=("on", "off"), default="on")
    p_serve.add_argument("--capture", choices=("on", "off"), default="off")
    p_serve.add_argument("--stop-after", type=float, default=None,
                         help="stop after this much simulated time (default: run until SIGINT)")
    p_serve.set_defaults(func=_cmd_serve)

    p_lat = sub.add_parser("latency-report",
                           help="estimate delay + fidelity from capture files")
    p_lat.add_argument("robot_capture")
    p_lat.add_argument("avatar_capture")
    p_lat.add_argument("--out", default="out")
    p_lat.set_defaults(func=_cmd_latency_report)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
