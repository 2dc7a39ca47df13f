"""
Command-line entry point: ``bdris run | bound-check | beampattern | trace``.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from models.config import ALL_VARIANTS, ExperimentSpec
from models.errors import BdrisError
from simulation.metrics import beampattern_table

from .experiment_runner import default_spec, run_experiment, solve_single
from .file_utils import (
    emit_results,
    load_config,
    spec_from_config,
    write_bcd_trace_csv,
    write_beampattern_csv,
    write_pdd_trace_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INVALID = 2


def build_spec(config=None, kind=None, **overrides):
    """ExperimentSpec from the preset of ``kind`` with an optional config file on top."""
    data = load_config(config) if config else {}
    kind = kind or data.get("experiment", {}).get("kind") or "convergence"
    base = default_spec(kind).model_dump(mode="json")
    return spec_from_config(data, base=base, kind=kind, **overrides)


def _with_seed(spec, seed):
    if seed is None:
        return spec
    data = spec.model_dump(mode="json")
    data["scenario"]["rng_seed"] = seed
    return ExperimentSpec.model_validate(data)


def cmd_run(args):
    spec = build_spec(
        args.config,
        args.kind,
        n_seeds=args.seeds,
        output_path=args.out,
        parallelism=args.parallelism,
    )
    result = run_experiment(spec, progress=not args.quiet)
    path = args.out or spec.output_path
    if args.format == "csv" and path.endswith(".json"):
        path = path[: -len(".json")] + ".csv"
    emit_results(result, args.format, path)
    failed = sum(record.failed for record in result.records)
    print(f"{len(result.records)} records ({failed} failed) written to {path}")
    return EXIT_OK


def cmd_bound_check(args):
    spec = build_spec(args.config, "bound_check", n_seeds=args.seeds)
    result = run_experiment(spec, progress=False)
    reports = [{"seed": record.seed, **record.extras} for record in result.records]
    print(json.dumps(reports if len(reports) > 1 else reports[0], indent=4))
    return EXIT_OK


def cmd_beampattern(args):
    spec = _with_seed(build_spec(args.config, "beampattern"), args.seed)
    ch, ris, result = solve_single(spec, args.variant)
    step = args.step or spec.beampattern_step_deg
    grid = np.arange(0.0, 180.0 + 1e-9, step)
    table = beampattern_table(result.final_state, ch, ris, grid)
    write_beampattern_csv(table, args.out)
    print(f"beampattern of {args.variant} ({len(grid)} angles) written to {args.out}")
    return EXIT_OK


def cmd_trace(args):
    spec = _with_seed(build_spec(args.config, args.kind), args.seed)
    _, _, result = solve_single(spec, args.variant)
    os.makedirs(args.out_dir, exist_ok=True)
    bcd_path = write_bcd_trace_csv(result, os.path.join(args.out_dir, "bcd_trace.csv"))
    pdd_path = write_pdd_trace_csv(result, os.path.join(args.out_dir, "pdd_trace.csv"))
    print(f"{result.iters_used} BCD iterations (converged={result.converged}); traces in {bcd_path}, {pdd_path}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="bdris", description="BD-RIS full-duplex sum-rate simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment family over sweep values and seeds")
    run.add_argument("--config", type=str, default=None, help="JSON config, relative paths use $BDRIS_CONFIG_DIR")
    run.add_argument("--kind", type=str, default=None)
    run.add_argument("--seeds", type=int, default=None, help="number of seeds on the ladder base_seed + j")
    run.add_argument("--out", type=str, default=None)
    run.add_argument("--format", type=str, default="json", choices=["csv", "json"])
    run.add_argument("--parallelism", type=int, default=None)
    run.add_argument("--quiet", action="store_true", help="hide the progress bar")
    run.set_defaults(func=cmd_run)

    bound = sub.add_parser("bound-check", help="print the single-user power bounds as JSON")
    bound.add_argument("--config", type=str, default=None)
    bound.add_argument("--seeds", type=int, default=None)
    bound.set_defaults(func=cmd_bound_check)

    beam = sub.add_parser("beampattern", help="solve once and write the normalized beampatterns")
    beam.add_argument("--config", type=str, default=None)
    beam.add_argument("--variant", type=str, default="bd_nonreciprocal", choices=list(ALL_VARIANTS))
    beam.add_argument("--seed", type=int, default=None)
    beam.add_argument("--step", type=float, default=None, help="angle grid step in degrees")
    beam.add_argument("--out", type=str, default="results/beampattern.csv")
    beam.set_defaults(func=cmd_beampattern)

    trace = sub.add_parser("trace", help="solve once and write the BCD and PDD trace CSVs")
    trace.add_argument("--config", type=str, default=None)
    trace.add_argument("--kind", type=str, default=None)
    trace.add_argument("--variant", type=str, default="bd_nonreciprocal", choices=list(ALL_VARIANTS))
    trace.add_argument("--seed", type=int, default=None)
    trace.add_argument("--out-dir", type=str, default="results")
    trace.set_defaults(func=cmd_trace)
    return ap


def main(argv=None):
    load_dotenv()
    level = getattr(logging, os.getenv("BDRIS_LOG_LEVEL", "INFO").upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s")

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BdrisError, ValidationError) as exc:
        message = str(exc).splitlines()[0]
        print(f"error: {message}", file=sys.stderr)
        return EXIT_INVALID
    except Exception:
        logger.exception("unexpected failure in %s", args.command)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
