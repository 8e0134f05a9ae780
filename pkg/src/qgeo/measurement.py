"""
Projective measurement for the (θ, r) pair of the canonical model: the weak commutation
check, Gram-Schmidt projectors built from the state derivatives, and the classical Fisher
information they deliver compared against the quantum one.
"""

import logging
from collections.abc import Sequence

import numpy as np
from attrs import frozen
from numpy.typing import ArrayLike, NDArray
from qg import CoefficientSingularityError, HamiltonianField, UndefinedCfimError
from qg.geometry import Point, RealMatrix, gauge_factor
from qg.oracle import FdSpec, encoded_state, probe_state, state_derivatives
from qg.su2 import QubitState, as_bloch, bloch

logger = logging.getLogger(__name__)

StateVector = NDArray[np.complex128]

PROBABILITY_FLOOR = 1e-12
SLOPE_FLOOR = 1e-9
NULL_RATIO = 1e-6
SINGULAR_DENOMINATOR = 1e-12
LOEWNER_SLACK = 1e-9


@frozen(eq=False)
class ProjectorSet:
    """
    Υ₁ = |ψ̃⟩, Υ₂ = |ω_θ⟩, Υ₃ = |ω_r⟩ - c|ω_θ⟩, where |ω_ℓ⟩ is the part of |∂_ℓψ̃⟩
    orthogonal to |ψ̃⟩. A vector that vanishes (Υ₃ always does for a qubit) is kept as None.
    """

    vectors: tuple[StateVector | None, ...]
    normalized: tuple[StateVector | None, ...]
    coefficient: complex


@frozen(eq=False)
class CfimResult:
    matrix: RealMatrix
    probabilities: tuple[float, ...]
    residuals: tuple[float, ...]
    boundary: tuple[int, ...]

    @property
    def total_probability(self) -> float:
        return float(sum(self.probabilities))


@frozen(eq=False)
class MeasurementReport:
    names: tuple[str, ...]
    encoded: StateVector
    projectors: ProjectorSet
    cfim: CfimResult
    qfim: RealMatrix
    weak_commutation: float

    @property
    def loewner_gap(self) -> float:
        return loewner_gap(self.qfim, self.cfim.matrix)


def weak_commutation(
    field: HamiltonianField,
    point: Point,
    probe: ArrayLike,
    T: float,
    mu: str = "theta",
    nu: str = "r",
) -> float:
    """
    (|Y_μ||Y_ν|/2) (e_μ × e_ν)·r_in; zero means the two gauge potentials commute on the
    probe and a single projective measurement can saturate both bounds.
    """

    r = as_bloch(probe)
    y_mu = gauge_factor(field, point, mu, T).vector
    y_nu = gauge_factor(field, point, nu, T).vector
    return 0.5 * float(np.cross(y_mu, y_nu) @ r)


def canonical_gram_schmidt_coefficient(theta: float, r: float) -> float:
    """
    sinθ / (1 + r cosθ), the closed-form magnitude of the Gram-Schmidt coefficient.
    """

    denominator = 1.0 + r * np.cos(theta)
    if abs(denominator) < SINGULAR_DENOMINATOR:
        raise CoefficientSingularityError(
            f"1 + r cosθ vanishes at θ={theta}, r={r}; ⟨ω_θ|ω_θ⟩ = 0 there"
        )
    return float(np.sin(theta) / denominator)


def _orthogonal_part(psi: StateVector, derivative: StateVector) -> StateVector:
    return derivative - np.vdot(psi, derivative) * psi


def _normalized(vector: StateVector | None) -> StateVector | None:
    if vector is None:
        return None
    return vector / np.linalg.norm(vector)


def build_projectors(
    encoded: StateVector | QubitState,
    d_theta: StateVector,
    d_r: StateVector,
) -> ProjectorSet:
    psi = encoded.array() if isinstance(encoded, QubitState) else np.asarray(encoded)
    omega_theta = _orthogonal_part(psi, d_theta)
    omega_r = _orthogonal_part(psi, d_r)

    norm_theta = float(np.linalg.norm(omega_theta))
    norm_r = float(np.linalg.norm(omega_r))
    if norm_theta <= NULL_RATIO * norm_r or norm_theta == 0.0:
        raise CoefficientSingularityError(
            "⟨ω_θ|ω_θ⟩ vanishes at this point; the Gram-Schmidt coefficient is undefined"
        )

    coefficient = complex(np.vdot(omega_theta, omega_r)) / norm_theta**2
    third = omega_r - coefficient * omega_theta
    # in a qubit the orthogonal complement of ψ is one-dimensional
    upsilon3 = None if np.linalg.norm(third) <= NULL_RATIO * max(norm_r, norm_theta) else third

    vectors = (psi, omega_theta, upsilon3)
    return ProjectorSet(
        vectors=vectors,
        normalized=tuple(_normalized(v) for v in vectors),
        coefficient=coefficient,
    )


def cfim(
    projectors: ProjectorSet,
    encoded: StateVector,
    derivatives: Sequence[StateVector],
    approach: Sequence[float] | None = (1.0, 0.0),
) -> CfimResult:
    """
    Σ_k ∂_ℓP ∂_mP / P with P(k|λ) = |⟨Υ̂_k|ψ̃⟩|² and the projectors held at λ.

    An outcome with P below 1e-12 contributes its limit along `approach` (a direction in
    parameter space); without one it is dropped and flagged when its amplitude has a
    non-zero slope.
    """

    psi = np.asarray(encoded)
    n = len(derivatives)
    matrix = np.zeros((n, n))
    probabilities: list[float] = []
    residuals: list[float] = []
    boundary: list[int] = []
    informative = False

    for index, projector in enumerate(projectors.normalized):
        if projector is None:
            continue
        amplitude = complex(np.vdot(projector, psi))
        slopes = np.array([complex(np.vdot(projector, d)) for d in derivatives])
        probability = abs(amplitude) ** 2
        probabilities.append(probability)
        gradient = 2.0 * (np.conj(amplitude) * slopes).real

        if probability >= PROBABILITY_FLOOR:
            informative = True
            matrix += np.outer(gradient, gradient) / probability
            continue

        if approach is None:
            if float(np.max(np.abs(slopes))) >= SLOPE_FLOOR:
                boundary.append(index)
            continue

        directional = complex(np.asarray(approach, dtype=np.float64) @ slopes)
        size = abs(directional)
        if size < SLOPE_FLOOR:
            continue
        projections = (np.conj(slopes) * directional).real
        matrix += 4.0 * np.outer(projections, projections) / size**2
        residuals.extend(float((np.conj(s) * directional).imag) / size for s in slopes)

    if not informative:
        raise UndefinedCfimError("every outcome probability is below the 1e-12 floor")
    if boundary:
        logger.warning("outcomes %s sit on the P = 0 boundary with non-zero slope", boundary)

    return CfimResult(
        matrix=matrix,
        probabilities=tuple(probabilities),
        residuals=tuple(residuals),
        boundary=tuple(boundary),
    )


def qfim_pure(encoded: StateVector, derivatives: Sequence[StateVector]) -> RealMatrix:
    psi = np.asarray(encoded)
    n = len(derivatives)
    fisher = np.empty((n, n))
    for i, d_i in enumerate(derivatives):
        for j, d_j in enumerate(derivatives):
            value = np.vdot(d_i, d_j) - np.vdot(d_i, psi) * np.vdot(psi, d_j)
            fisher[i, j] = 4.0 * value.real
    return fisher


def loewner_gap(qfim: RealMatrix, classical: RealMatrix) -> float:
    """
    Smallest eigenvalue of QFIM - CFIM; non-negative up to rounding for any measurement.
    """

    difference = qfim - classical
    return float(np.min(np.linalg.eigvalsh(0.5 * (difference + difference.T))))


def is_dominated(qfim: RealMatrix, classical: RealMatrix) -> bool:
    scale = max(1.0, float(np.max(np.abs(qfim))))
    return loewner_gap(qfim, classical) >= -LOEWNER_SLACK * scale


def measurement_report(
    field: HamiltonianField,
    point: Point,
    probe: ArrayLike | QubitState,
    T: float,
    spec: FdSpec = FdSpec(),
    names: tuple[str, str] = ("theta", "r"),
    approach: Sequence[float] | None = (1.0, 0.0),
) -> MeasurementReport:
    initial = probe_state(probe)

    def state_at(at: Point) -> StateVector:
        return encoded_state(field, at, initial, T)

    psi, derivatives = state_derivatives(state_at, point, names, spec)
    projectors = build_projectors(psi, derivatives[0], derivatives[1])
    classical = cfim(projectors, psi, derivatives, approach)
    return MeasurementReport(
        names=names,
        encoded=psi,
        projectors=projectors,
        cfim=classical,
        qfim=qfim_pure(psi, derivatives),
        weak_commutation=weak_commutation(field, point, bloch(initial), T, names[0], names[1]),
    )
