"""
The geometry, scan and adaptive commands: each takes a validated RunConfig, computes, writes
its records through `output.records_write` and returns what it wrote.
"""

import itertools
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from qg import (
    DomainError,
    GeometryReport,
    HamiltonianField,
    TransitionPointError,
    geometry_report,
    winding_number,
)
from qg.geometry import Point, gauge_factor, optimal_probe
from qg.su2 import Vec3, as_bloch, bloch, ground_state

from qgeo import models
from qgeo.adaptive import (
    AdaptiveTrace,
    CanonicalTpt,
    PeakCriterion,
    SshTpt,
    StepPolicy,
    StepSchedule,
    TptModel,
    auto_search,
    run_schedule,
)
from qgeo.configs import ConfigError, RunConfig, scan_threads
from qgeo.control import control_qmt
from qgeo.expressions import field_from_expressions
from qgeo.output import (
    Record,
    bound_unit,
    column,
    parameter_column,
    parameter_unit,
    records_write,
    tensor_unit,
)

logger = logging.getLogger(__name__)

PROBE_QUANTITIES = {"qmt", "berry", "fom", "qfim", "qcrb"}


def model_field(config: RunConfig) -> HamiltonianField:
    match config.model:
        case "canonical":
            return models.canonical_field(config.H0)
        case "ssh":
            return models.ssh_field()
        case _:
            assert config.custom is not None
            return field_from_expressions(config.custom.components, config.custom.names)


def _validate_point(config: RunConfig, point: dict[str, float]) -> None:
    match config.model:
        case "canonical":
            models.CanonicalParams(H0=config.H0, **point)
        case "ssh":
            models.SshParams(**point)
        case _:
            pass


def model_point(config: RunConfig, names: Sequence[str] | None = None) -> dict[str, float]:
    """
    The configured values of `names` (all parameters by default); a full point is also
    checked against the model's parameter ranges.
    """

    wanted = config.names if names is None else names
    missing = [name for name in wanted if name not in config.params]
    if missing:
        raise ConfigError(f"params {missing} are needed for model '{config.model}'")
    point = {name: config.params[name] for name in wanted}
    if names is None:
        _validate_point(config, point)
    return point


def resolve_probe(config: RunConfig, field: HamiltonianField, point: Point) -> Vec3:
    match config.probe:
        case "ground":
            return bloch(ground_state(field.at(point)))
        case "optimal":
            name = config.optimal_for or field.names[0]
            return optimal_probe(gauge_factor(field, point, name, config.T))
        case vector:
            return as_bloch(vector)


def report_columns(report: GeometryReport, quantities: set[str]) -> Record:
    names = report.names
    row: dict[str, object] = {}
    pairs = [(i, j) for i in range(len(names)) for j in range(i, len(names))]
    for i, j in pairs:
        mu, nu = names[i], names[j]
        if "qmt" in quantities:
            row[column(f"qmt[{mu},{nu}]", tensor_unit(mu, nu))] = float(report.qmt[i, j])
        if "berry" in quantities and i != j:
            row[column(f"berry[{mu},{nu}]", tensor_unit(mu, nu))] = float(report.berry[i, j])
        if "fom" in quantities and i != j:
            row[column(f"fom[{mu},{nu}]", "1")] = float(report.fom[i, j])
        if "qfim" in quantities:
            row[column(f"qfim[{mu},{nu}]", tensor_unit(mu, nu))] = float(report.qfim[i, j])
        if "qcrb" in quantities:
            row[column(f"qcrb[{mu},{nu}]", bound_unit(mu, nu))] = float(report.qcrb[i, j])
    if quantities & {"qfim", "qcrb"}:
        row[column("rank", "1")] = report.rank
    return row


def geometry_record(
    config: RunConfig, field: HamiltonianField, point: Point, quantities: set[str]
) -> Record:
    row: dict[str, object] = {parameter_column(name): point[name] for name in field.names}

    if quantities & PROBE_QUANTITIES:
        probe = resolve_probe(config, field, point)
        report = geometry_report(field, point, probe, config.T, config.repetitions)
        row.update(report_columns(report, quantities))

    if "max_qmt" in quantities:
        for name in field.names:
            factor = gauge_factor(field, point, name, config.T)
            label = column(f"max_qmt[{name}]", tensor_unit(name, name))
            row[label] = 0.25 * factor.magnitude**2

    if "control_qmt" in quantities:
        for name in field.names:
            label = column(f"control_qmt[{name}]", tensor_unit(name, name))
            row[label] = control_qmt(field, point, name, name, config.T)

    if "winding" in quantities:
        row[column("winding", "1")] = _winding(config, point)

    if "coarse_chern" in quantities:
        row[column("coarse_chern", "1")] = _coarse_chern(config, point)

    return row


def _winding(config: RunConfig, point: Point) -> float:
    if config.model != "ssh":
        raise ConfigError("the winding number is defined for the ssh model only")
    try:
        estimate = winding_number(point["v"], point["w"], config.quadrature.winding_nodes)
    except TransitionPointError:
        logger.info("winding number undefined at v = w = %g", point["v"])
        return math.nan
    return float(estimate.value)


def _coarse_chern(config: RunConfig, point: Point) -> float:
    if config.model != "canonical":
        raise ConfigError("the coarse-grained Chern number is defined for the canonical model")
    try:
        return models.coarse_chern_canonical(point["r"])
    except TransitionPointError:
        logger.info("coarse-grained Chern number undefined at r = 1")
        return math.nan


def cmd_geometry(config: RunConfig) -> list[Record]:
    field = model_field(config)
    point = model_point(config)
    quantities = {"qmt", "berry", "fom", "qfim", "qcrb"}
    records = [geometry_record(config, field, point, quantities)]
    records_write(records, config.format, config.out)
    return records


def scan_points(config: RunConfig) -> list[dict[str, float]]:
    """
    Grid points in row-major order; parameters not swept keep their `params` value.
    """

    if config.scan is None:
        raise ConfigError("scan needs a [scan] table with at least one axis")
    swept = [axis.name for axis in config.scan.axes]
    fixed = [name for name in config.names if name not in swept]
    base = model_point(config, fixed)
    grids = [np.linspace(axis.start, axis.stop, axis.count) for axis in config.scan.axes]
    points = [
        {**base, **{name: float(value) for name, value in zip(swept, values)}}
        for values in itertools.product(*grids)
    ]
    for point in points:
        _validate_point(config, point)
    return points


def cmd_scan(config: RunConfig) -> list[Record]:
    points = scan_points(config)
    assert config.scan is not None
    field = model_field(config)
    quantities = set(config.scan.quantities)
    threads = min(scan_threads(), len(points))
    logger.info("scanning %d points on %d threads", len(points), threads)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        records = list(pool.map(lambda p: geometry_record(config, field, p, quantities), points))

    records_write(records, config.format, config.out)
    return records


def adaptive_model(config: RunConfig) -> tuple[TptModel, dict[str, float]]:
    params = config.params
    match config.model:
        case "canonical":
            tpt = CanonicalTpt(phi0=params.get("phi", 0.0), H0=config.H0)
        case "ssh":
            tpt = SshTpt(w0=params.get("w", 1.0))
        case _:
            raise ConfigError("adaptive runs need the canonical or ssh model")
    missing = [name for name in tpt.names if name not in params]
    if missing:
        raise ConfigError(f"params {missing} give the hidden initial values and are required")
    return tpt, {name: params[name] for name in tpt.names}


def trace_records(trace: AdaptiveTrace, tpt: TptModel) -> tuple[list[Record], list[str]]:
    peak = trace.peak_parameter
    names = tpt.names
    columns = (
        ["iteration", "parameter", "step"]
        + [parameter_column(name) for name in names]
        + [column(f"cumulative[{name}]", parameter_unit(name)) for name in names]
        + [
            column(f"qmt[{peak},{peak}]", tensor_unit(peak, peak)),
            column(f"probe_qmt[{peak},{peak}]", tensor_unit(peak, peak)),
            column("residual_norm", "H0"),
        ]
        + [column(f"estimate[{name}]", parameter_unit(name)) for name in names]
        + [column(f"deviation[{name}]", parameter_unit(name)) for name in names]
        + ["status"]
    )
    rows: list[Record] = []
    for record in trace.records:
        row: list[object] = [record.iteration, record.parameter or "", record.step]
        row += [record.values[name] for name in names]
        row += [record.cumulative[name] for name in names]
        row += [record.qmt, record.probe_qmt, record.residual_norm]
        row += [record.estimates[name] for name in names]
        row += [record.deviations[name] for name in names]
        row.append(trace.status)
        rows.append(dict(zip(columns, row)))
    return rows, columns


def cmd_adaptive(config: RunConfig) -> AdaptiveTrace:
    tpt, initial = adaptive_model(config)
    settings = config.adaptive
    criterion = PeakCriterion(eta=settings.eta)

    if settings.mode == "schedule":
        schedule = StepSchedule(settings.schedule)
        try:
            schedule.ordered(tpt.names)
        except DomainError as e:
            raise ConfigError(f"adaptive.schedule: {e}") from e
        trace = run_schedule(
            tpt, initial, schedule, config.T, criterion, settings.noise_sigma, config.seed
        )
    else:
        policy = StepPolicy(
            kind=settings.policy, initial_step=settings.initial_step, min_step=settings.min_step
        )
        trace = auto_search(
            tpt,
            initial,
            config.T,
            policy,
            criterion,
            settings.max_iters,
            settings.noise_sigma,
            config.seed,
        )

    rows, columns = trace_records(trace, tpt)
    records_write(rows, config.format, config.out, columns)
    return trace
