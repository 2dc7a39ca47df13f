"""
Experiment families over sweep grids and seed ladders.

Every (sweep value, seed) pair draws one channel realization that all requested
RIS variants share, so variant comparisons are paired.
"""

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from tqdm import tqdm

from models.config import ExperimentSpec
from models.errors import InvalidArgumentError, NumericalFailureError
from models.state import ExperimentRecord, ExperimentResult
from optimization.bcd import run_bcd
from simulation.channel_model import generate_channel_set
from simulation.metrics import beampattern_table
from simulation.reciprocity import colinearity_gap, dl_power_bound, phi_ul_optimal, ul_power_bound

logger = logging.getLogger(__name__)

ALPHA_GRID = tuple(round(0.1 * i, 1) for i in range(11))


def default_spec(kind):
    """Experiment preset with the default geometry of its kind."""
    blocked = {"direct_links_blocked": True}
    presets = {
        "convergence": dict(
            scenario=dict(
                n_antennas=2, n_dl_users=2, n_ul_users=2, n_ris_elements=32,
                angles_dl_deg=[150.0], angles_ul_deg=[75.0],
            ),
        ),
        "sweep_elements": dict(
            scenario=dict(angles_dl_deg=[150.0], angles_ul_deg=[75.0]),
            sweep_values=[8, 16, 24, 32],
        ),
        "sweep_ul_angle": dict(
            scenario=dict(angles_dl_deg=[90.0], **blocked),
            sweep_values=[float(a) for a in range(0, 181, 15)],
        ),
        "beampattern": dict(scenario=dict(angles_dl_deg=[90.0], angles_ul_deg=[60.0], **blocked)),
        "rate_region": dict(
            scenario=dict(angles_dl_deg=[90.0], angles_ul_deg=[60.0], **blocked),
            sweep_values=list(ALPHA_GRID),
        ),
        "group_size": dict(
            scenario=dict(angles_dl_deg=[90.0], angles_ul_deg=[60.0], **blocked),
            ris=dict(architecture="group", group_size=1),
            sweep_values=[1, 2, 4, 8, 16],
        ),
        "si_sweep": dict(
            scenario=dict(angles_dl_deg=[150.0], angles_ul_deg=[75.0], **blocked),
            sweep_values=[-140.0, -120.0, -100.0, -80.0, -60.0],
        ),
        "mu_rate_region": dict(
            scenario=dict(
                n_antennas=2, n_dl_users=2, n_ul_users=2,
                angles_dl_deg=[90.0, 120.0], angles_ul_deg=[60.0, 75.0], **blocked,
            ),
            sweep_values=list(ALPHA_GRID),
        ),
        "bound_check": dict(scenario=dict(angles_dl_deg=[90.0], angles_ul_deg=[60.0], **blocked)),
    }
    if kind not in presets:
        raise InvalidArgumentError(f"unknown experiment kind {kind!r}")
    return ExperimentSpec.model_validate({"kind": kind, **presets[kind]})


def variant_ris(base, variant, group_size=None):
    """RisConfig of one variant; BD variants keep the base grouping (or ``group_size``)."""
    if variant == "d_ris":
        return base.evolve(architecture="single", group_size=None, reciprocal=False)
    changes = {"reciprocal": variant == "bd_reciprocal"}
    if group_size is not None:
        changes.update(architecture="group", group_size=int(group_size))
    elif base.architecture == "single":
        changes.update(architecture="full", group_size=None)
    return base.evolve(**changes)


def apply_sweep(spec, value):
    """Scenario and base RIS config at one sweep value."""
    scenario, ris = spec.scenario, spec.ris
    if value is None:
        return scenario, ris
    kind = spec.kind
    if kind == "sweep_elements":
        m = int(value)
        if ris.architecture == "group" and m % ris.group_size:
            raise InvalidArgumentError(f"group size {ris.group_size} does not divide M={m}")
        return scenario.evolve(n_ris_elements=m), ris
    if kind == "sweep_ul_angle":
        return scenario.evolve(angles_ul_deg=[float(value)] * scenario.n_ul_users), ris
    if kind in ("rate_region", "mu_rate_region"):
        return scenario.evolve(alpha_dl=float(value)), ris
    if kind == "si_sweep":
        return scenario.evolve(si_power_db=float(value)), ris
    if kind == "group_size":
        return scenario, ris.evolve(architecture="group", group_size=int(value))
    return scenario, ris


def _plain(values):
    return [float(v) for v in np.ravel(values)]


def _solve_variant(spec, scenario, ch, ris, variant, sweep_value, seed):
    record = ExperimentRecord(kind=spec.kind, variant=variant, sweep_value=sweep_value, seed=seed)
    try:
        result = run_bcd(ch, ris, scenario, spec.solver)
    except NumericalFailureError as exc:
        logger.warning("%s seed=%d sweep=%s failed: %s", variant, seed, sweep_value, exc)
        record.failed = True
        record.error = str(exc)
        return record

    record.dl_rate = result.dl_rate
    record.ul_rate = result.ul_rate
    record.sum_rate = result.dl_rate + result.ul_rate
    record.objective = float(result.objective_trace[-1])
    record.iters = int(result.iters_used)
    record.converged = bool(result.converged)
    record.pdd_violation = float(result.pdd_violation)
    if spec.kind == "convergence":
        record.extras["objective_trace"] = _plain(result.objective_trace)
    if spec.kind == "beampattern":
        grid = np.arange(0.0, 180.0 + 1e-9, spec.beampattern_step_deg)
        table = beampattern_table(result.final_state, ch, ris, grid)
        record.extras["beampattern"] = {name: _plain(values) for name, values in table.items()}
    return record


def _check_bound_users(n_dl_users, n_ul_users):
    if n_dl_users < 1 or n_ul_users < 1:
        raise InvalidArgumentError(
            f"bound check needs at least one DL and one UL user, got K={n_dl_users}, I={n_ul_users}"
        )


def _bound_record(spec, ch, seed):
    _check_bound_users(ch.n_dl_users, ch.n_ul_users)
    g = ch.g_bs_ris[:, 0]
    h_d, h_u = ch.h_ref_dl[0], ch.h_ref_ul[0]
    ul = ul_power_bound(g, h_u)
    dl = dl_power_bound(h_d, g)
    # the bound-attaining UL scattering matrix, evaluated on the DL link
    dl_at_ul_optimum = dl_power_bound(h_d, g, phi_ul_optimal(g, h_u))
    extras = {
        "ul_bound": ul.to_dict(),
        "dl_bound": dl.to_dict(),
        "dl_at_ul_optimum": dl_at_ul_optimum.to_dict(),
        "colinearity_gap": colinearity_gap(h_d, h_u, g),
    }
    return ExperimentRecord(kind=spec.kind, variant="bound_check", sweep_value=None, seed=seed, extras=extras)


def run_point(spec, sweep_index, sweep_value, seed):
    """All records of one (sweep value, seed) work item."""
    scenario, base_ris = apply_sweep(spec, sweep_value)
    scenario = scenario.evolve(rng_seed=seed)
    ch = generate_channel_set(scenario, base_ris)
    if spec.kind == "bound_check":
        return sweep_index, [_bound_record(spec, ch, seed)]

    group_size = sweep_value if spec.kind == "group_size" else None
    records = [
        _solve_variant(spec, scenario, ch, variant_ris(base_ris, variant, group_size), variant, sweep_value, seed)
        for variant in spec.variants
    ]
    return sweep_index, records


def solve_single(spec, variant="bd_nonreciprocal", sweep_value=None):
    """One solve at the spec's base seed; returns (channels, ris, SolverResult)."""
    scenario, base_ris = apply_sweep(spec, sweep_value)
    ch = generate_channel_set(scenario, base_ris)
    group_size = sweep_value if spec.kind == "group_size" else None
    ris = variant_ris(base_ris, variant, group_size)
    return ch, ris, run_bcd(ch, ris, scenario, spec.solver)


def aggregate_records(records, variants):
    """Mean and standard deviation per (sweep value, variant) over non-failed records."""
    groups = {}
    for record in records:
        if not record.failed:
            groups.setdefault((record.sweep_value, record.variant), []).append(record)
    aggregates = []
    for (sweep_value, variant), members in groups.items():
        entry = {"sweep_value": sweep_value, "variant": variant, "count": len(members)}
        for metric in ("sum_rate", "dl_rate", "ul_rate"):
            values = np.array([getattr(r, metric) for r in members])
            entry[f"{metric}_mean"] = float(values.mean())
            entry[f"{metric}_std"] = float(values.std())
        aggregates.append(entry)
    order = list(variants) + ["bound_check"]
    aggregates.sort(key=lambda e: (float("-inf") if e["sweep_value"] is None else e["sweep_value"], order.index(e["variant"])))
    return aggregates


def run_experiment(spec, progress=True):
    """Run every work item of ``spec`` and collect the records.

    Raises:
        InvalidArgumentError: If a bound check is asked for without UL users.
        NumericalFailureError: If every record of some sweep point failed.
    """
    if spec.kind == "bound_check":
        _check_bound_users(spec.scenario.n_dl_users, spec.scenario.n_ul_users)
    sweep = list(spec.sweep_values) if spec.is_sweep else [None]
    base_seed = spec.scenario.rng_seed
    work = [(index, value, base_seed + j) for index, value in enumerate(sweep) for j in range(spec.n_seeds)]
    logger.info("running %s: %d sweep points x %d seeds", spec.kind, len(sweep), spec.n_seeds)

    outcomes = []
    if spec.parallelism > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=spec.parallelism) as pool:
            futures = [pool.submit(run_point, spec, *item) for item in work]
            for future in tqdm(futures, desc=spec.kind, disable=not progress):
                outcomes.append(future.result())
    else:
        for item in tqdm(work, desc=spec.kind, disable=not progress):
            outcomes.append(run_point(spec, *item))

    variant_order = list(spec.variants) + ["bound_check"]
    records = []
    for index in range(len(sweep)):
        point = [r for i, recs in outcomes if i == index for r in recs]
        if point and all(r.failed for r in point):
            raise NumericalFailureError(f"every solve failed at sweep value {sweep[index]}")
        point.sort(key=lambda r: (r.seed, variant_order.index(r.variant)))
        records.extend(point)
        logger.info("sweep point %s: %d records", sweep[index], len(point))

    return ExperimentResult(
        spec=spec.model_dump(mode="json"),
        records=records,
        aggregates=aggregate_records(records, spec.variants),
    )
