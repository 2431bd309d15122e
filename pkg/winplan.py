#!/usr/bin/env python3
"""Command-line front end: plan sample sizes, estimate WinPs, run simulations.

Usage:
    python winplan.py plan --config configs/pd_example.json [--sweep correlation=0.1,0.3,0.5]
    python winplan.py estimate --data trial.csv --arm-column arm --level 0.95
    python winplan.py simulate --config configs/desk_simulation.json --replicates 2000 --seed 7 --threads 4

Exit codes: 0 success, 1 I/O or parse failure, 2 validation or infeasibility failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

import config
import reporting
from data_loader import load_trial_data
from exceptions import DataFormatError, DomainError, InfeasibleDesignError
from sample_size import required_sample_size, sweep_designs
from schemas import EstimateInput, PlanConfig, PlanRow, SimConfig
from sim_harness import simulate_config
from winp_estimation import analyze_trial, brute_force_covariance, brute_force_winp

logger = logging.getLogger("winplan")

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2


def parse_sweep(items: Optional[Sequence[str]]) -> Dict[str, List[float]]:
    """
    Parse repeated ``field=v1,v2,...`` options into sweep axes.

    Raises:
        ValueError: On malformed items or non-numeric values
    """
    axes: Dict[str, List[float]] = {}
    for item in items or []:
        field, sep, values = item.partition("=")
        if not sep or not values:
            raise ValueError(f"--sweep expects field=v1,v2,..., got '{item}'")
        try:
            axes[field.strip()] = [float(v) for v in values.split(",")]
        except ValueError:
            raise ValueError(f"--sweep values for '{field}' must be numbers, got '{values}'") from None
    return axes


def load_json(path: str) -> dict:
    """Read a JSON config file (I/O and syntax errors propagate)."""
    return json.loads(Path(path).read_text(encoding="utf-8"))


def emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info("Report written to %s", out)
    else:
        sys.stdout.write(text)


def cmd_plan(args: argparse.Namespace) -> int:
    """Compute required sample sizes for a design or a sweep of designs."""
    raw = load_json(args.config)
    if args.sweep:
        raw["sweep"] = {**raw.get("sweep", {}), **parse_sweep(args.sweep)}
    if args.format:
        raw["format"] = args.format
    if args.out:
        raw["out"] = args.out
    plan = PlanConfig.model_validate(raw)
    design = plan.design()

    if plan.sweep:
        rows = sweep_designs(design, plan.sweep)
    else:
        rows = [PlanRow(design=design, result=required_sample_size(design))]

    echo = plan.model_dump(mode="json", exclude={"format", "out"})
    if plan.format == "records":
        text = reporting.to_records("plan", echo, reporting.plan_rows(rows))
    else:
        text = reporting.plan_table(rows, echo)
    emit(text, plan.out)

    failed = [row for row in rows if row.status == "error"]
    for row in failed:
        print(f"infeasible design {row.overrides}: {row.message}", file=sys.stderr)
    return EXIT_INVALID if failed else EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    """Estimate endpoint and global WinPs with DeLong covariances from a data file."""
    request = EstimateInput(
        data=args.data,
        arm_column=args.arm_column,
        level=args.level,
        delimiter=args.delimiter,
        format=args.format or "table",
        out=args.out,
    )
    data = load_trial_data(request.data, request.arm_column, request.delimiter)
    analysis = analyze_trial(data, request.level)

    if args.check:
        exact = [brute_force_winp(data.treated[:, j], data.control[:, j]) for j in range(data.k)]
        gap = float(np.max(np.abs(brute_force_covariance(data) - np.asarray(analysis.covariance))))
        agree = exact == analysis.per_endpoint
        print(f"check: estimates {'match' if agree else 'DIFFER FROM'} pairwise enumeration; "
              f"max covariance gap {gap:.3g}", file=sys.stderr)

    echo = request.model_dump(mode="json", exclude={"format", "out"})
    if request.format == "records":
        text = reporting.to_records("estimate", echo, [reporting.analysis_record(analysis)])
    else:
        text = reporting.analysis_table(analysis, echo)
    emit(text, request.out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run the Monte Carlo coverage/assurance study for every configured scenario."""
    raw = load_json(args.config)
    overrides = {"replicates": args.replicates, "master_seed": args.seed, "threads": args.threads,
                 "format": args.format, "out": args.out}
    raw.update({key: value for key, value in overrides.items() if value is not None})
    if args.sweep:
        raw["sweep"] = {**raw.get("sweep", {}), **parse_sweep(args.sweep)}
    sim = SimConfig.model_validate(raw)

    show_progress = config.SHOW_PROGRESS and not args.no_progress
    results = simulate_config(sim, show_progress=show_progress)

    # thread count and output options do not affect results and stay out of the echo
    echo = sim.model_dump(mode="json", exclude={"threads", "format", "out"})
    if sim.format == "records":
        text = reporting.to_records("scenario", echo, reporting.simulation_rows(results))
    else:
        text = reporting.simulation_table(results, echo)
    emit(text, sim.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="winplan",
        description="Sample size planning and estimation for the global win probability",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Log progress details to stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    plan = commands.add_parser("plan", help="Compute required sample sizes")
    plan.add_argument("--config", required=True, help="JSON design config")
    plan.add_argument("--sweep", action="append", metavar="FIELD=V1,V2,...",
                      help="Sweep a field (assurance, correlation, lower_bound, alloc_ratio, sd_ratio, ci_level); repeatable")
    plan.add_argument("--out", help="Write the report to this file")
    plan.add_argument("--format", choices=["table", "records"])
    plan.set_defaults(handler=cmd_plan)

    estimate = commands.add_parser("estimate", help="Estimate WinPs from subject-level data")
    estimate.add_argument("--data", required=True, help="Delimited data file with a header row")
    estimate.add_argument("--arm-column", default=config.DEFAULT_ARM_COLUMN, help="Arm column (1=treated, 0=control)")
    estimate.add_argument("--level", type=float, default=config.DEFAULT_CI_LEVEL, help="Confidence level")
    estimate.add_argument("--delimiter", help="Field separator (sniffed when omitted)")
    estimate.add_argument("--check", action="store_true", help="Cross-check against pairwise enumeration")
    estimate.add_argument("--out", help="Write the report to this file")
    estimate.add_argument("--format", choices=["table", "records"])
    estimate.set_defaults(handler=cmd_estimate)

    simulate = commands.add_parser("simulate", help="Monte Carlo coverage and assurance study")
    simulate.add_argument("--config", required=True, help="JSON scenario config")
    simulate.add_argument("--replicates", type=int, help="Replicates per scenario")
    simulate.add_argument("--seed", type=int, help="Master seed")
    simulate.add_argument("--threads", type=int, help="Worker threads")
    simulate.add_argument("--sweep", action="append", metavar="FIELD=V1,V2,...", help="Sweep a field; repeatable")
    simulate.add_argument("--no-progress", action="store_true", help="Disable progress bars")
    simulate.add_argument("--out", help="Write the report to this file")
    simulate.add_argument("--format", choices=["table", "records"])
    simulate.set_defaults(handler=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else config.LOG_LEVEL,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.handler(args)
    except DataFormatError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_IO
    except (OSError, json.JSONDecodeError) as e:
        print(f"Error reading input: {e}", file=sys.stderr)
        return EXIT_IO
    except InfeasibleDesignError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as e:
        print(f"Invalid configuration:\n{e}", file=sys.stderr)
        return EXIT_INVALID
    except (DomainError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
