"""
Brute-force QGT from finite differences of the evolved state, independent of every closed
form in `qg.geometry`.
"""

from collections.abc import Callable, Sequence
from typing import Literal

import attrs
import numpy as np
from numpy.typing import ArrayLike, NDArray

from qg.errors import DomainError, StepTooLargeError
from qg.geometry import HamiltonianField, Point, shifted
from qg.su2 import QubitState, evolve, state_from_bloch

StateMap = Callable[[Point], NDArray[np.complex128]]

MIN_STEP = 1e-9
MAX_STEP = 1e-2
GAUGE_OVERLAP_FLOOR = 1e-3


def _check_step(_: object, __: object, value: float) -> None:
    if not MIN_STEP <= value <= MAX_STEP:
        raise DomainError(
            f"finite-difference step must lie in [{MIN_STEP}, {MAX_STEP}], got {value}"
        )


@attrs.frozen
class FdSpec:
    step: float = attrs.field(default=1e-5, validator=_check_step)
    scheme: Literal["central", "richardson"] = "central"


def probe_state(probe: QubitState | ArrayLike) -> QubitState:
    if isinstance(probe, QubitState):
        return probe
    return state_from_bloch(probe)


def encoded_state(
    field: HamiltonianField,
    point: Point,
    probe: QubitState | ArrayLike,
    T: float,
) -> NDArray[np.complex128]:
    return evolve(field.at(point), T) @ probe_state(probe).array()


def _aligned(
    reference: NDArray[np.complex128], state: NDArray[np.complex128]
) -> NDArray[np.complex128]:
    overlap = complex(np.vdot(reference, state))
    size = abs(overlap)
    if size < GAUGE_OVERLAP_FLOOR:
        raise StepTooLargeError(
            f"overlap {size:.3g} between neighbouring states is too small to fix the phase gauge"
        )
    return state * (size / overlap)


def _central(
    state_at: StateMap,
    point: Point,
    name: str,
    step: float,
    psi: NDArray[np.complex128],
) -> NDArray[np.complex128]:
    upper = _aligned(psi, state_at(shifted(point, name, step)))
    lower = _aligned(psi, state_at(shifted(point, name, -step)))
    return (upper - lower) / (2.0 * step)


def state_derivatives(
    state_at: StateMap,
    point: Point,
    names: Sequence[str],
    spec: FdSpec = FdSpec(),
) -> tuple[NDArray[np.complex128], list[NDArray[np.complex128]]]:
    """
    The state at `point` and its gauge-fixed derivative along each name.
    """

    psi = np.asarray(state_at(point), dtype=np.complex128)
    derivatives: list[NDArray[np.complex128]] = []
    for name in names:
        coarse = _central(state_at, point, name, spec.step, psi)
        if spec.scheme == "richardson":
            fine = _central(state_at, point, name, 0.5 * spec.step, psi)
            derivatives.append((4.0 * fine - coarse) / 3.0)
        else:
            derivatives.append(coarse)
    return psi, derivatives


def qgt_from_derivatives(
    psi: NDArray[np.complex128],
    derivatives: Sequence[NDArray[np.complex128]],
) -> NDArray[np.complex128]:
    n = len(derivatives)
    chi = np.empty((n, n), dtype=np.complex128)
    projections = [complex(np.vdot(psi, d)) for d in derivatives]
    for i, d_mu in enumerate(derivatives):
        for j, d_nu in enumerate(derivatives):
            chi[i, j] = complex(np.vdot(d_mu, d_nu)) - projections[i].conjugate() * projections[j]
    return chi


def qgt_fd_states(
    state_at: StateMap,
    point: Point,
    names: Sequence[str],
    spec: FdSpec = FdSpec(),
) -> NDArray[np.complex128]:
    psi, derivatives = state_derivatives(state_at, point, names, spec)
    return qgt_from_derivatives(psi, derivatives)


def qgt_fd(
    field: HamiltonianField,
    point: Point,
    probe: QubitState | ArrayLike,
    T: float,
    spec: FdSpec = FdSpec(),
) -> NDArray[np.complex128]:
    initial = probe_state(probe)

    def state_at(at: Point) -> NDArray[np.complex128]:
        return encoded_state(field, at, initial, T)

    return qgt_fd_states(state_at, point, field.names, spec)
