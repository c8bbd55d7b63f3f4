"""Command-line front end.

Subcommands:

* run    -- simulate a scenario and write the timeline as CSV or JSON
* check  -- print the feasibility report; exit 0 feasible, 1 infeasible
* oracle -- drive the fixed-step engine; --compare prints deviation metrics
            against the event engine

Exit codes are stable contracts: 0 success/feasible, 1 infeasible, 2 input
error, 3 engine guard trip.  SMA_GRID_EVENT_CAP overrides the event guard.
"""

from __future__ import annotations

import argparse
import os
import sys

from .engine import DEFAULT_EVENT_CAP, compare_timelines, run, run_fixed_step
from .errors import NonTermination, ScenarioInvalid, SmaGridError
from .feasibility import check_feasibility
from .scenario import load_scenario
from .timeline import Timeline, write_timeline_csv, write_timeline_json

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_GUARD = 3


def _event_cap() -> int:
    raw = os.environ.get("SMA_GRID_EVENT_CAP")
    if raw is None:
        return DEFAULT_EVENT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ScenarioInvalid(f"SMA_GRID_EVENT_CAP must be an integer, got {raw!r}") from None
    if cap <= 0:
        raise ScenarioInvalid(f"SMA_GRID_EVENT_CAP must be positive, got {cap}")
    return cap


def _write(timeline: Timeline, out: str, fmt: str) -> None:
    if fmt == "csv":
        write_timeline_csv(timeline, out)
    else:
        write_timeline_json(timeline, out)


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.config, tie_break=args.tie_break)
    timeline = run(scenario, event_cap=_event_cap())
    _write(timeline, args.out, args.format)
    verdict = "feasible" if timeline.summary.feasible else "infeasible"
    print(f"wrote {len(timeline.records)} records to {args.out} ({verdict})")
    return EXIT_OK


def _print_report(timeline: Timeline) -> None:
    report = check_feasibility(timeline)
    feasible = timeline.summary.feasible
    print("FEASIBLE" if feasible else "INFEASIBLE")
    if report.first_violation is not None:
        print(f"first violation at t={report.first_violation:.6g} h")
    if report.deficiency_intervals:
        print("deficiency intervals:")
        for iv in report.deficiency_intervals:
            print(f"  [{iv.start:.6g}, {iv.end:.6g}) h  peak {iv.peak:.6g} kW"
                  f"  energy {iv.energy:.6g} kWh")
    if timeline.summary.deadline_misses:
        print("deadline misses:")
        for m in timeline.summary.deadline_misses:
            print(f"  load {m.load_id} instance {m.instance} at t={m.t:.6g} h")


def _cmd_check(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.config, tie_break=args.tie_break)
    timeline = run(scenario, event_cap=_event_cap())
    _print_report(timeline)
    return EXIT_OK if timeline.summary.feasible else EXIT_INFEASIBLE


def _cmd_oracle(args: argparse.Namespace) -> int:
    if args.dt <= 0:
        raise ScenarioInvalid(f"--dt must be positive, got {args.dt}")
    scenario = load_scenario(args.config, tie_break=args.tie_break)
    cap = _event_cap()
    stepped = run_fixed_step(scenario, args.dt, event_cap=cap)
    if args.out:
        _write(stepped, args.out, args.format)
        print(f"wrote {len(stepped.records)} records to {args.out}")
    if args.compare:
        exact = run(scenario, event_cap=cap)
        cmp_ = compare_timelines(exact, stepped, args.dt)
        print(f"completion sets match: {cmp_.completion_sets_match}")
        print(f"completion order violations: {cmp_.completion_order_violations}")
        print(f"max completion-time deviation: {cmp_.max_completion_dt:.6g} h")
        print(f"deficiency energy: exact {cmp_.deficiency_energy_exact:.6g} kWh, "
              f"stepped {cmp_.deficiency_energy_stepped:.6g} kWh "
              f"(delta {cmp_.deficiency_energy_delta:.6g})")
        print(f"final SOC: exact {cmp_.final_soc_exact:.9g}, "
              f"stepped {cmp_.final_soc_stepped:.9g} "
              f"(delta {cmp_.final_soc_delta:.3g})")
    elif not args.out:
        verdict = "feasible" if stepped.summary.feasible else "infeasible"
        print(f"{len(stepped.records)} steps, {verdict}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="smagrid",
        description="Event-driven simulation of priority-based energy "
                    "management in islanded micro-grids.")
    parser.add_argument("--tie-break", choices=["index"], default=None,
                        help="allow duplicate priorities, broken by ascending load id")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write the timeline")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--format", choices=["csv", "json"], default="csv")

    p_check = sub.add_parser("check", help="print the feasibility report")
    p_check.add_argument("--config", required=True)

    p_oracle = sub.add_parser("oracle", help="run the fixed-step reference engine")
    p_oracle.add_argument("--config", required=True)
    p_oracle.add_argument("--dt", type=float, required=True)
    p_oracle.add_argument("--compare", action="store_true",
                          help="also run the event engine and print deviations")
    p_oracle.add_argument("--out", default=None)
    p_oracle.add_argument("--format", choices=["csv", "json"], default="csv")

    args = parser.parse_args(argv)
    handler = {"run": _cmd_run, "check": _cmd_check, "oracle": _cmd_oracle}[args.command]
    try:
        return handler(args)
    except ScenarioInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonTermination as exc:
        print(f"engine guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except SmaGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
