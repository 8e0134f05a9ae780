"""
Self-verification: closed forms against the finite-difference and Trotter oracles, transition
limits, topological invariants, measurement optimality and the adaptive reference rows.

Closed forms are looked up on `qgeo.models` at call time, so a patched model function is
what gets checked.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
from attrs import define, frozen
from qg import DegenerateError, HamiltonianField, winding_number
from qg.geometry import Point, gauge_factor
from qg.oracle import FdSpec, qgt_fd
from qg.su2 import bloch, ground_state
from rich.table import Table

from qgeo import models
from qgeo.adaptive import StepSchedule, run_schedule_canonical
from qgeo.configs import RunConfig
from qgeo.control import control_qgt_matrix, control_qmt_oracle
from qgeo.measurement import is_dominated, measurement_report
from qgeo.models import CanonicalParams, SshParams
from qgeo.output import Record, records_write

logger = logging.getLogger(__name__)

LIMIT_TIMES = (5.0, 10.0, 50.0)
LIMIT_TOLERANCE = 1e-3
PEAK_TOLERANCE = 1e-9
CONTROL_TOLERANCE = 2e-4
CONTROL_BERRY_TOLERANCE = 1e-8
MEASUREMENT_TOLERANCE = 1e-4
RESIDUAL_FLOOR = 1e-6
INVARIANT_TOLERANCE = 1e-3
ROW_TOLERANCE = 5e-4

TABLE_THETA_STEPS = (math.pi / 3, math.pi / 5, math.pi / 6, math.pi / 15)
TABLE_THETA_ROWS = (62.9773, 88.894, 99.6344, 99.994)
TABLE_R_STEPS = (0.1, 0.3, 0.2, 0.17)
TABLE_R_ROWS = (0.88088, 3.57969, 20.6705, 97.0358)


@frozen
class CheckResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""


@define
class VerifyReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> list[str]:
        return [check.name for check in self.checks if not check.passed]


def _result(name: str, deviation: float, tolerance: float, detail: str = "") -> CheckResult:
    passed = math.isfinite(deviation) and deviation <= tolerance
    if not passed:
        logger.warning("check %s failed: deviation %.3g > %.3g", name, deviation, tolerance)
    return CheckResult(name, passed, deviation, tolerance, detail)


def _canonical_point(rng: np.random.Generator) -> CanonicalParams:
    return CanonicalParams(
        theta=float(rng.uniform(0.1, math.pi - 0.1)),
        phi=float(rng.uniform(0.0, 2.0 * math.pi)),
        r=float(rng.uniform(0.0, 2.0)),
    )


def _ssh_point(rng: np.random.Generator) -> SshParams:
    return SshParams(
        v=float(rng.uniform(0.0, 2.0)),
        w=float(rng.uniform(0.2, 2.0)),
        k=float(rng.uniform(-math.pi + 0.1, math.pi - 0.1)),
    )


def _eigen_probe(field_x: np.ndarray) -> np.ndarray:
    return bloch(ground_state(field_x))


def check_canonical_closed_forms(config: RunConfig, rng: np.random.Generator) -> CheckResult:
    field = models.canonical_field()
    spec = FdSpec(step=config.fd.step, scheme="richardson")
    worst = 0.0
    for _ in range(config.verify.points):
        p = _canonical_point(rng)
        chi = qgt_fd(field, p.point(), _eigen_probe(field.at(p.point())), config.T, spec)
        metric = models.ground_qmt_matrix_canonical(p, config.T)
        # closed-form curvature is 2 Im χ, the opposite sign to qg.berry
        curvature = models.ground_berry_matrix_canonical(p, config.T)
        worst = max(
            worst,
            float(np.max(np.abs(chi.real - metric))),
            float(np.max(np.abs(2.0 * chi.imag - curvature))),
        )
    return _result("canonical closed form vs oracle", worst, config.verify.tolerance)


def check_ssh_closed_forms(config: RunConfig, rng: np.random.Generator) -> CheckResult:
    field = models.ssh_field()
    spec = FdSpec(step=config.fd.step, scheme="richardson")
    worst = 0.0
    for _ in range(config.verify.points):
        q = _ssh_point(rng)
        chi = qgt_fd(field, q.point(), _eigen_probe(field.at(q.point())), config.T, spec)
        metric = models.ground_qmt_matrix_ssh(q, config.T)
        curvature = models.ground_berry_matrix_ssh(q, config.T)
        worst = max(
            worst,
            float(np.max(np.abs(chi.real - metric))),
            float(np.max(np.abs(2.0 * chi.imag - curvature))),
        )
    return _result("ssh closed form vs oracle", worst, config.verify.tolerance)


def check_max_qmt(config: RunConfig, rng: np.random.Generator) -> CheckResult:
    T = config.T
    canonical = models.canonical_field()
    ssh = models.ssh_field()
    worst = 0.0
    for _ in range(config.verify.points):
        p = _canonical_point(rng)
        peaks = models.max_qmt_canonical(p, T)
        for name, peak in zip(models.CANONICAL_NAMES, peaks):
            magnitude = gauge_factor(canonical, p.point(), name, T).magnitude
            worst = max(worst, abs(peak - 0.25 * magnitude**2) / T**2)

        q = _ssh_point(rng)
        peaks = models.max_qmt_ssh(q, T)
        for name, peak in zip(models.SSH_NAMES, peaks):
            magnitude = gauge_factor(ssh, q.point(), name, T).magnitude
            worst = max(worst, abs(peak - 0.25 * magnitude**2) / T**2)
    return _result("maximal qmt vs gauge magnitude", worst, PEAK_TOLERANCE)


def check_transition_limits(config: RunConfig, _: np.random.Generator) -> CheckResult:
    worst = 0.0
    for T in LIMIT_TIMES:
        scale = T * T
        p = models.canonical_limit_params()
        peaks = np.array(models.max_qmt_canonical(p, T))
        worst = max(worst, float(np.max(np.abs(peaks - [scale, 0.0, scale]))) / scale)
        ground = models.ground_qmt_matrix_canonical(p, T)
        expected = 0.5 * scale * np.array([[1.0, 0.0, -1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 1.0]])
        worst = max(worst, float(np.max(np.abs(ground - expected))) / scale)

        w = 1.0
        q = models.ssh_limit_params(w=w)
        peaks = np.array(models.max_qmt_ssh(q, T))
        worst = max(worst, float(np.max(np.abs(peaks - [scale, scale, scale * w * w]))) / scale)
        ground = models.ground_qmt_matrix_ssh(q, T)
        signs = np.array([[1.0, -1.0, -1.0], [-1.0, 1.0, 1.0], [-1.0, 1.0, 1.0]])
        worst = max(worst, float(np.max(np.abs(ground - 0.5 * scale * signs))) / scale)
    return _result("transition limits", worst, LIMIT_TOLERANCE, "relative to T²")


def check_invariants(config: RunConfig, rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    grid = config.quadrature.chern_grid
    for r, expected in ((0.3, 2.0), (0.5, 2.0), (1.5, 0.0), (2.0, 0.0)):
        estimate = models.coarse_chern_quadrature(r, grid)
        worst = max(worst, abs(abs(estimate.value) - expected))
        worst = max(worst, abs(abs(models.coarse_chern_canonical(r)) - expected))

    for _ in range(50):
        v = float(rng.uniform(0.0, 2.0))
        w = float(rng.uniform(0.0, 2.0))
        if abs(v - w) < 0.05:
            continue
        estimate = winding_number(v, w, config.quadrature.winding_nodes)
        expected = 0.5 * (1.0 - math.copysign(1.0, v - w))
        worst = max(worst, abs(estimate.quadrature - expected))
    return _result("topological invariants", worst, INVARIANT_TOLERANCE)


def check_control(config: RunConfig, rng: np.random.Generator) -> CheckResult:
    T = config.T
    field = models.canonical_field()
    spec = FdSpec(step=config.fd.step, scheme="richardson")
    worst = 0.0
    for _ in range(config.verify.control_points):
        point = _canonical_point(rng).point()
        result = control_qmt_oracle(field, point, T, spec, config.verify.trotter_steps)
        expected = control_qgt_matrix(field, point, T).qmt
        worst = max(worst, float(np.max(np.abs(result.qmt - expected))) / T**2)
        if float(np.max(np.abs(result.berry))) > CONTROL_BERRY_TOLERANCE:
            worst = math.inf
    return _result(
        "control-enhanced vs trotter oracle", worst, CONTROL_TOLERANCE, "relative to T²"
    )


def _measurement_gaps(
    field: HamiltonianField, point: Point, probe: np.ndarray, T: float, spec: FdSpec
) -> tuple[float, bool]:
    # (relative CFIM-QFIM gap when every residual vanishes else 0, Loewner dominance)
    try:
        report = measurement_report(field, point, probe, T, spec)
    except DegenerateError as e:
        logger.info("skipping measurement point %s: %s", point, e)
        return 0.0, True
    gap = 0.0
    if max((abs(x) for x in report.cfim.residuals), default=0.0) < RESIDUAL_FLOOR:
        scale = max(1.0, float(np.max(np.abs(report.qfim))))
        gap = float(np.max(np.abs(report.cfim.matrix - report.qfim))) / scale
    return gap, is_dominated(report.qfim, report.cfim.matrix)


def check_measurement(config: RunConfig, rng: np.random.Generator) -> CheckResult:
    T = config.T
    field = models.canonical_field()
    spec = FdSpec(step=config.fd.step, scheme="richardson")
    worst = 0.0
    dominated = True
    for _ in range(config.verify.measurement_points):
        p = CanonicalParams(
            theta=float(rng.uniform(0.2, math.pi - 0.2)),
            phi=float(rng.uniform(0.0, 2.0 * math.pi)),
            r=float(rng.uniform(0.0, 0.8)),
        )
        point = p.point()
        gap, ok = _measurement_gaps(field, point, _eigen_probe(field.at(point)), T, spec)
        worst = max(worst, gap)
        dominated = dominated and ok

        probe = rng.normal(size=3)
        _, ok = _measurement_gaps(field, point, probe / np.linalg.norm(probe), T, spec)
        dominated = dominated and ok
    if not dominated:
        worst = math.inf
    return _result("measurement optimality", worst, MEASUREMENT_TOLERANCE)


def check_adaptive_rows(config: RunConfig, _: np.random.Generator) -> CheckResult:
    theta = run_schedule_canonical(
        math.pi / 4, 0.0, 1.0, StepSchedule({"theta": TABLE_THETA_STEPS}), 10.0
    )
    r = run_schedule_canonical(math.pi, 0.0, 0.2, StepSchedule({"r": TABLE_R_STEPS}), 10.0)
    gaps = [abs(a - b) for a, b in zip(theta.qmt_values, TABLE_THETA_ROWS)]
    gaps += [abs(a - b) for a, b in zip(r.qmt_values, TABLE_R_ROWS)]
    return _result("adaptive reference rows", max(gaps), ROW_TOLERANCE, "T = 10")


CHECKS: tuple[Callable[[RunConfig, np.random.Generator], CheckResult], ...] = (
    check_canonical_closed_forms,
    check_ssh_closed_forms,
    check_max_qmt,
    check_transition_limits,
    check_invariants,
    check_control,
    check_measurement,
    check_adaptive_rows,
)


def run_checks(config: RunConfig) -> VerifyReport:
    rng = np.random.default_rng(config.seed if config.seed is not None else 0)
    checks: list[CheckResult] = []
    for check in CHECKS:
        logger.info("running %s", check.__name__)
        checks.append(check(config, rng))
    return VerifyReport(checks)


def report_table(report: VerifyReport) -> Table:
    table = Table(title="qgeo verify")
    table.add_column("check", no_wrap=True)
    table.add_column("status")
    table.add_column("max deviation", justify="right")
    table.add_column("tolerance", justify="right")
    table.add_column("note")
    for check in report.checks:
        status = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
        deviation = f"{check.max_deviation:.3g}"
        table.add_row(check.name, status, deviation, f"{check.tolerance:.3g}", check.detail)
    return table


def report_records(report: VerifyReport) -> list[Record]:
    return [
        {
            "check": check.name,
            "status": "pass" if check.passed else "fail",
            "max_deviation": check.max_deviation,
            "tolerance": check.tolerance,
        }
        for check in report.checks
    ]


def cmd_verify(config: RunConfig) -> VerifyReport:
    report = run_checks(config)
    if config.out is not None:
        records_write(report_records(report), config.format, config.out)
    return report
