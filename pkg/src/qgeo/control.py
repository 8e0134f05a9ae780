"""
Control-enhanced sensing: a control field X_c = -X(λ̃) applied alongside the encoding
cancels the dynamics at λ̃, and an ancilla-entangled probe then sees the full generator
T ∂_ℓX·J for every parameter at once.
"""

import logging
import math
from collections.abc import Iterable

import numpy as np
from attrs import frozen
from numpy.typing import NDArray
from qg import DomainError, GeometryReport, HamiltonianField
from qg.geometry import Point, RealMatrix, pseudo_inverse
from qg.oracle import FdSpec, qgt_fd_states
from qg.su2 import Vec3, evolve

logger = logging.getLogger(__name__)

MIN_TROTTER_STEPS = 10_000
ENTANGLEMENT_TOLERANCE = 1e-9

BELL_STATE = np.array([1.0, 0.0, 0.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)


@frozen
class ControlSpec:
    field: HamiltonianField
    estimate: Point

    @property
    def control_vector(self) -> Vec3:
        return -self.field.at(self.estimate)

    def composite(self, point: Point) -> Vec3:
        return self.field.at(point) + self.control_vector


@frozen(eq=False)
class ControlOracleResult:
    qgt: NDArray[np.complex128]
    steps: int
    converged: bool

    @property
    def qmt(self) -> RealMatrix:
        return self.qgt.real

    @property
    def berry(self) -> RealMatrix:
        return -2.0 * self.qgt.imag


def control_qmt(field: HamiltonianField, point: Point, mu: str, nu: str, T: float) -> float:
    _check_duration(T)
    return 0.25 * T * T * float(field.derivative(point, mu) @ field.derivative(point, nu))


def control_qgt_matrix(
    field: HamiltonianField, point: Point, T: float, M: int = 1
) -> GeometryReport:
    """
    Full geometry under perfect control. The tensor is real, so Berry curvature and figure of
    merit vanish and every parameter reaches its bound simultaneously.
    """

    _check_duration(T)
    if M < 1:
        raise DomainError(f"number of repetitions must be at least 1, got {M}")

    partials = np.array([field.derivative(point, name) for name in field.names])
    metric = 0.25 * T * T * (partials @ partials.T)
    n = len(field.names)
    fisher = 4.0 * metric
    inverse, null_space = pseudo_inverse(fisher)
    return GeometryReport(
        names=field.names,
        qgt=metric.astype(np.complex128),
        qmt=metric,
        berry=np.zeros((n, n)),
        fom=np.zeros((n, n)),
        qfim=fisher,
        qcrb=inverse / M,
        repetitions=M,
        singular_directions=null_space,
    )


def is_maximally_entangled(state: NDArray[np.complex128]) -> bool:
    vec = np.asarray(state, dtype=np.complex128)
    if vec.shape != (4,) or abs(np.vdot(vec, vec).real - 1.0) > ENTANGLEMENT_TOLERANCE:
        return False
    amplitudes = vec.reshape(2, 2)
    reduced = amplitudes @ amplitudes.conj().T
    return bool(np.max(np.abs(reduced - 0.5 * np.eye(2))) <= ENTANGLEMENT_TOLERANCE)


def control_qmt_oracle(
    field: HamiltonianField,
    point: Point,
    T: float,
    spec: FdSpec = FdSpec(),
    steps: int = MIN_TROTTER_STEPS,
    probe: NDArray[np.complex128] | None = None,
) -> ControlOracleResult:
    """
    Finite-difference QGT of the system-ancilla state after N interleaved steps of encoding
    and control, with the control held at the estimate λ̃ = `point`.
    """

    _check_duration(T)
    if steps < 1:
        raise DomainError(f"number of Trotter steps must be positive, got {steps}")

    initial = BELL_STATE if probe is None else np.asarray(probe, dtype=np.complex128)
    if not is_maximally_entangled(initial):
        raise DomainError("control-enhanced probe must be a maximally entangled two-qubit state")

    converged = steps >= MIN_TROTTER_STEPS
    if not converged:
        logger.warning(
            "%d Trotter steps is below %d; the interleaved evolution may not have converged",
            steps,
            MIN_TROTTER_STEPS,
        )

    dt = T / steps
    control_step = evolve(ControlSpec(field, point).control_vector, dt)

    def state_at(at: Point) -> NDArray[np.complex128]:
        step = control_step @ evolve(field.at(at), dt)
        system = np.linalg.matrix_power(step, steps)
        return np.kron(system, np.eye(2)) @ initial

    chi = qgt_fd_states(state_at, point, field.names, spec)
    return ControlOracleResult(qgt=chi, steps=steps, converged=converged)


def residual_hamiltonian(
    field: HamiltonianField,
    initial: Point,
    steps: Iterable[tuple[str, float]],
) -> Vec3:
    """
    The field left after shifting the initial parameters by every recorded adjustment. It is
    zero exactly when the adjustments close the gap to the transition.
    """

    totals: dict[str, list[float]] = {name: [] for name in initial}
    for name, delta in steps:
        if name not in totals:
            raise DomainError(f"adjustment of unknown parameter '{name}'")
        totals[name].append(delta)
    shifted = {name: value + math.fsum(totals[name]) for name, value in initial.items()}
    return field.at(shifted)


def _check_duration(T: float) -> None:
    if not math.isfinite(T) or T <= 0.0:
        raise DomainError(f"evolution time must be positive and finite, got {T}")
