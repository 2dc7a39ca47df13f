"""
File utility functions for configuration loading and result export.
"""

import csv
import json
import logging
import os
import time
from dataclasses import asdict, fields

from pydantic import ValidationError

from models.config import ExperimentSpec
from models.errors import InvalidArgumentError
from models.state import RECORD_COLUMNS, ExperimentRecord, ExperimentResult

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_DIR = "configs"
BCD_TRACE_COLUMNS = ("iter", "f_o", "dl_rate", "ul_rate", "pdd_violation")
PDD_TRACE_COLUMNS = ("group", "outer_iter", "inner_iters", "rho", "violation_inf_norm", "inner_objective")
BEAMPATTERN_COLUMNS = ("theta_deg", "dl_impinging", "dl_reflected", "ul_impinging", "ul_reflected")


def config_dir():
    """Directory that relative config paths are resolved against."""
    return os.getenv("BDRIS_CONFIG_DIR", DEFAULT_CONFIG_DIR)


def resolve_config_path(path):
    if os.path.isabs(path) or os.path.exists(path):
        return path
    return os.path.join(config_dir(), path)


def load_config(path):
    """Read a JSON config file into a dict with scenario/ris/solver/experiment sections."""
    resolved = resolve_config_path(path)
    try:
        with open(resolved, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as exc:
        raise InvalidArgumentError(f"config file not found: {resolved}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"config file {resolved} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"config file {resolved} must hold a JSON object")
    unknown = set(data) - {"scenario", "ris", "solver", "experiment"}
    if unknown:
        raise InvalidArgumentError(f"unknown config sections: {sorted(unknown)}")
    return data


def spec_from_config(data, base=None, **overrides):
    """Build an ExperimentSpec from config sections.

    Sections of ``data`` are laid over the matching sections of ``base`` (a
    dumped ExperimentSpec, e.g. a kind preset) key by key; non-None
    ``overrides`` replace top-level experiment keys last.
    """
    experiment = dict(base or {})
    experiment.update(data.get("experiment", {}))
    for section in ("scenario", "ris", "solver"):
        if section in data:
            experiment[section] = {**experiment.get(section, {}), **data[section]}
    experiment.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentSpec.model_validate(experiment)
    except ValidationError as exc:
        raise InvalidArgumentError(f"invalid experiment configuration: {exc}") from exc


def load_experiment_spec(path, **overrides):
    return spec_from_config(load_config(path), **overrides)


def _ensure_parent(path):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _record_row(record):
    row = asdict(record)
    return [row[column] for column in RECORD_COLUMNS]


def _seeds(result):
    return sorted({record.seed for record in result.records})


def emit_results(result, fmt, path):
    """Write an ExperimentResult as CSV or JSON.

    Both formats echo the resolved configuration and the seeds. The CSV keeps
    them in leading ``#`` comment lines followed by one header row and one row
    per record; the JSON document carries records, aggregates and the echo.

    Returns:
        The path written.
    """
    _ensure_parent(path)
    timestamp = time.strftime("%Y-%m-%d %H:%M:%S")
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# timestamp: {timestamp}\n")
            f.write(f"# config: {json.dumps(result.spec, sort_keys=True)}\n")
            f.write(f"# seeds: {json.dumps(_seeds(result))}\n")
            writer = csv.writer(f)
            writer.writerow(RECORD_COLUMNS)
            for record in result.records:
                writer.writerow(_record_row(record))
    elif fmt == "json":
        data = {
            "timestamp": timestamp,
            "config": result.spec,
            "seeds": _seeds(result),
            "records": [asdict(record) for record in result.records],
            "aggregates": result.aggregates,
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=4, sort_keys=True)
    else:
        raise InvalidArgumentError(f"unknown result format {fmt!r}, expected 'csv' or 'json'")
    logger.info("wrote %d records to %s", len(result.records), path)
    return path


def read_results_json(path):
    """Parse a JSON result file back into an ExperimentResult."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    names = {f.name for f in fields(ExperimentRecord)}
    records = [ExperimentRecord(**{k: v for k, v in item.items() if k in names}) for item in data["records"]]
    return ExperimentResult(spec=data["config"], records=records, aggregates=data.get("aggregates", []))


def _write_rows(path, columns, rows):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        writer.writerows(rows)
    return path


def write_bcd_trace_csv(solver_result, path):
    rows = [
        (row.iteration, row.objective, row.dl_rate, row.ul_rate, row.pdd_violation)
        for row in solver_result.trace
    ]
    return _write_rows(path, BCD_TRACE_COLUMNS, rows)


def write_pdd_trace_csv(solver_result, path):
    rows = [
        (row.group, row.outer_iter, row.inner_iters, row.rho, row.violation_inf_norm, row.inner_objective)
        for row in solver_result.pdd_trace
    ]
    return _write_rows(path, PDD_TRACE_COLUMNS, rows)


def write_beampattern_csv(table, path):
    """Write a normalized beampattern table keyed by ``BEAMPATTERN_COLUMNS``."""
    columns = [list(table[name]) for name in BEAMPATTERN_COLUMNS]
    return _write_rows(path, BEAMPATTERN_COLUMNS, zip(*columns))
