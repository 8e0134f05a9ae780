"""
Closed-form gauge potentials of a parameterized SU(2) evolution and the geometric
quantities built from them: quantum geometric tensor, metric, Berry curvature, figure of
merit, quantum Fisher information and the quantum Cramér-Rao bound.

Conventions: the encoded state is e^{-iT X(λ)·J}|ψ_in⟩ with J = σ/2, and the gauge
potential for parameter ℓ is Ã_ℓ = -Y_ℓ·J, where Y_ℓ = |Y_ℓ| e_ℓ. The probe enters only
through the Bloch vector r of |ψ_in⟩.
"""

import logging
import math
from collections.abc import Callable, Mapping

import numpy as np
from attrs import frozen
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize  # pyright: ignore[reportUnknownVariableType]

from qg.errors import DomainError, InconsistencyError
from qg.su2 import Vec3, as_bloch, as_vec3, sinc

logger = logging.getLogger(__name__)

Point = Mapping[str, float]
RealMatrix = NDArray[np.float64]
ComplexMatrix = NDArray[np.complex128]

MAGNITUDE_FLOOR = 1e-12
RANK_TOLERANCE = 1e-10
FOM_FLOOR = 1e-12
FOM_SLACK = 1e-9
CURVATURE_ROUNDING = 1e-12
PARTIALS_TOLERANCE = 1e-6

_TAYLOR_CUTOFF = 1e-4


@frozen
class HamiltonianField:
    """
    A coefficient field λ -> X(λ) together with its partial derivatives.
    """

    names: tuple[str, ...]
    value: Callable[[Point], ArrayLike]
    partial: Callable[[Point, str], ArrayLike]
    label: str = "custom"

    def at(self, point: Point) -> Vec3:
        missing = [name for name in self.names if name not in point]
        if missing:
            raise DomainError(f"{self.label} field is missing parameters {missing}")
        return as_vec3(self.value(point), f"X at {dict(point)}")

    def derivative(self, point: Point, name: str) -> Vec3:
        if name not in self.names:
            raise DomainError(f"'{name}' is not a parameter of the {self.label} field")
        return as_vec3(self.partial(point, name), f"d{name} X at {dict(point)}")

    def partials_deviation(self, point: Point, step: float = 1e-6) -> float:
        """
        Largest entrywise gap between the supplied partials and central differences of
        `value` at `point`.
        """

        worst = 0.0
        for name in self.names:
            upper = self.at(shifted(point, name, step))
            lower = self.at(shifted(point, name, -step))
            estimate = (upper - lower) / (2.0 * step)
            worst = max(worst, float(np.max(np.abs(estimate - self.derivative(point, name)))))
        return worst

    def check_partials(self, point: Point, tolerance: float = PARTIALS_TOLERANCE) -> bool:
        deviation = self.partials_deviation(point)
        if deviation > tolerance:
            logger.warning(
                "partials of the %s field deviate from finite differences by %.3g at %s",
                self.label,
                deviation,
                dict(point),
            )
            return False
        return True

    @classmethod
    def from_values(
        cls,
        names: tuple[str, ...],
        value: Callable[[Point], ArrayLike],
        label: str = "custom",
        step: float = 1e-6,
    ) -> "HamiltonianField":
        """
        Builds a field whose partials are central differences of `value`.
        """

        def partial(point: Point, name: str) -> ArrayLike:
            upper = np.asarray(value(shifted(point, name, step)), dtype=np.float64)
            lower = np.asarray(value(shifted(point, name, -step)), dtype=np.float64)
            return (upper - lower) / (2.0 * step)

        return cls(names=names, value=value, partial=partial, label=label)


@frozen(eq=False)
class GaugeFactor:
    magnitude: float
    direction: Vec3

    @property
    def vector(self) -> Vec3:
        return self.magnitude * self.direction


@frozen(eq=False)
class GeometryReport:
    names: tuple[str, ...]
    qgt: ComplexMatrix
    qmt: RealMatrix
    berry: RealMatrix
    fom: RealMatrix
    qfim: RealMatrix
    qcrb: RealMatrix
    repetitions: int
    singular_directions: RealMatrix
    """
    Columns span the null space of the QFIM; the QCRB carries no information along them.
    """

    @property
    def rank(self) -> int:
        return len(self.names) - self.singular_directions.shape[1]

    def index(self, name: str) -> int:
        return self.names.index(name)


def shifted(point: Point, name: str, offset: float) -> dict[str, float]:
    return {**point, name: point[name] + offset}


def _one_minus_sinc(a: float) -> float:
    if abs(a) < _TAYLOR_CUTOFF:
        a2 = a * a
        return a2 / 6.0 - a2 * a2 / 120.0
    return 1.0 - math.sin(a) / a


def _versine_ratio(a: float) -> float:
    # (1 - cos a) / a², written through sinc(a/2) so that a -> 0 is exact
    return 0.5 * float(sinc(0.5 * a)) ** 2


def gauge_vector(X: ArrayLike, dX: ArrayLike, T: float) -> Vec3:
    """
    Y_ℓ for the coefficient vector X and its derivative dX = ∂_ℓX.

    Y = -T D + T(1 - sinc(T|X|)) D⊥ + T² (1 - cos(T|X|))/(T|X|)² X×D, with D⊥ the part of
    D orthogonal to X. The products with X are formed directly, so the α_ℓ -> 0 and
    |X| -> 0 limits need no special casing.
    """

    x_vec = as_vec3(X, "X")
    d_vec = as_vec3(dX, "dX")
    x = float(np.linalg.norm(x_vec))
    angle = T * x

    if x > 0.0:
        d_perp = d_vec - (float(x_vec @ d_vec) / (x * x)) * x_vec
    else:
        d_perp = np.zeros(3)

    return (
        -T * d_vec
        + T * _one_minus_sinc(angle) * d_perp
        + T * T * _versine_ratio(angle) * np.cross(x_vec, d_vec)
    )


def gauge_magnitude(X: ArrayLike, dX: ArrayLike, T: float) -> float:
    """
    |Y_ℓ| from its closed form T|∂X| sqrt(cos²α + sin²α sinc²(T|X|/2)).
    """

    x_vec = as_vec3(X, "X")
    d_vec = as_vec3(dX, "dX")
    x = float(np.linalg.norm(x_vec))
    parallel2 = float(x_vec @ d_vec) ** 2 / (x * x) if x > 0.0 else 0.0
    perpendicular2 = max(float(d_vec @ d_vec) - parallel2, 0.0)
    return T * math.sqrt(parallel2 + perpendicular2 * float(sinc(0.5 * T * x)) ** 2)


def gauge_factor_from_vectors(X: ArrayLike, dX: ArrayLike, T: float) -> GaugeFactor:
    _check_duration(T)
    y = gauge_vector(X, dX, T)
    magnitude = float(np.linalg.norm(y))
    if magnitude > MAGNITUDE_FLOOR:
        return GaugeFactor(magnitude=magnitude, direction=y / magnitude)
    return GaugeFactor(magnitude=magnitude, direction=np.zeros(3))


def gauge_factor(field: HamiltonianField, point: Point, name: str, T: float) -> GaugeFactor:
    _check_duration(T)
    return gauge_factor_from_vectors(field.at(point), field.derivative(point, name), T)


def qgt(f_mu: GaugeFactor, f_nu: GaugeFactor, probe: ArrayLike) -> complex:
    """
    χ_μν = |Y_μ||Y_ν|/4 [e_μ·e_ν - (e_μ·r)(e_ν·r) + i (e_μ×e_ν)·r].
    """

    r = as_bloch(probe)
    y_mu, y_nu = f_mu.vector, f_nu.vector
    real = float(y_mu @ y_nu) - float(y_mu @ r) * float(y_nu @ r)
    imag = float(np.cross(y_mu, y_nu) @ r)
    return 0.25 * complex(real, imag)


def qmt(f_mu: GaugeFactor, f_nu: GaugeFactor, probe: ArrayLike) -> float:
    return qgt(f_mu, f_nu, probe).real


def berry(f_mu: GaugeFactor, f_nu: GaugeFactor, probe: ArrayLike) -> float:
    return -2.0 * qgt(f_mu, f_nu, probe).imag


def fom(g_mm: float, g_nn: float, g_mn: float, omega: float) -> float:
    """
    Figure of merit |Ω_μν| / (2 sqrt(det 𝒢_μν)) in [0, 1]; 0 means the pair can be estimated
    simultaneously at the quantum limit.
    """

    det = g_mm * g_nn - g_mn * g_mn
    bound = 0.25 * omega * omega
    if abs(omega) < FOM_FLOOR:
        return 0.0
    if det < bound - FOM_SLACK * max(1.0, abs(g_mm * g_nn)):
        raise InconsistencyError(
            f"metric determinant {det!r} is below Ω²/4 = {bound!r}; the inputs do not come "
            "from a single pure state"
        )
    if det <= 0.0:
        return 1.0
    return min(abs(omega) / (2.0 * math.sqrt(det)), 1.0)


def pseudo_inverse(matrix: RealMatrix) -> tuple[RealMatrix, RealMatrix]:
    """
    Eigendecomposition pseudo-inverse of a symmetric PSD matrix, plus an orthonormal basis of
    the directions dropped under the relative rank tolerance.
    """

    eigenvalues, vectors = np.linalg.eigh(matrix)
    scale = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    keep = eigenvalues > RANK_TOLERANCE * scale if scale > 0.0 else np.zeros_like(eigenvalues, bool)
    kept = vectors[:, keep]
    inverse = (kept / eigenvalues[keep]) @ kept.T
    return inverse, vectors[:, ~keep]


def geometry_report(
    field: HamiltonianField,
    point: Point,
    probe: ArrayLike,
    T: float,
    M: int = 1,
) -> GeometryReport:
    if M < 1:
        raise DomainError(f"number of repetitions must be at least 1, got {M}")

    r = as_bloch(probe)
    factors = [gauge_factor(field, point, name, T) for name in field.names]
    n = len(factors)

    chi = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            chi[i, j] = qgt(factors[i], factors[j], r)

    metric = chi.real.copy()
    curvature = -2.0 * chi.imag
    magnitudes = np.array([factor.magnitude for factor in factors])
    # cross products of nearly parallel Y leave rounding residue of order eps·|Y_μ||Y_ν|
    curvature[np.abs(curvature) < CURVATURE_ROUNDING * np.outer(magnitudes, magnitudes)] = 0.0

    merit = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                merit[i, j] = fom(metric[i, i], metric[j, j], metric[i, j], curvature[i, j])

    fisher = 4.0 * metric
    inverse, null_space = pseudo_inverse(fisher)
    if null_space.shape[1]:
        logger.info("QFIM at %s has %d singular directions", dict(point), null_space.shape[1])

    return GeometryReport(
        names=field.names,
        qgt=chi,
        qmt=metric,
        berry=curvature,
        fom=merit,
        qfim=fisher,
        qcrb=inverse / M,
        repetitions=M,
        singular_directions=null_space,
    )


def optimal_probe(factor: GaugeFactor) -> Vec3:
    """
    A probe Bloch vector orthogonal to e_ℓ, which saturates the maximal QMT |Y_ℓ|²/4.
    """

    if factor.magnitude <= MAGNITUDE_FLOOR:
        return np.array([0.0, 0.0, 1.0])
    e = factor.direction
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(e)))] = 1.0
    probe = np.cross(e, axis)
    return probe / np.linalg.norm(probe)


def _sphere(angles: NDArray[np.float64]) -> Vec3:
    theta, phi = float(angles[0]), float(angles[1])
    return np.array(
        [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    )


def incompatibility_residual(e_mu: ArrayLike, e_nu: ArrayLike, starts: int = 24) -> float:
    """
    min over unit r of max(|e_μ·r|, |e_ν·r|, |(e_μ×e_ν)·r|).

    A value bounded away from zero means no single probe makes both parameters optimal
    while also zeroing their Berry curvature.
    """

    a = as_vec3(e_mu, "e_mu")
    b = as_vec3(e_nu, "e_nu")
    c = np.cross(a, b)

    def objective(angles: NDArray[np.float64]) -> float:
        r = _sphere(angles)
        return max(abs(float(a @ r)), abs(float(b @ r)), abs(float(c @ r)))

    best = math.inf
    # golden-angle spiral of starting points over the sphere
    for i in range(starts):
        z = 1.0 - (2.0 * i + 1.0) / starts
        start = np.array([math.acos(z), (i * math.pi * (3.0 - math.sqrt(5.0))) % (2 * math.pi)])
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000},
        )
        best = min(best, float(result.fun))  # pyright: ignore[reportUnknownMemberType, reportUnknownArgumentType]
    return best


def _check_duration(T: float) -> None:
    if not math.isfinite(T) or T <= 0.0:
        raise DomainError(f"evolution time must be positive and finite, got {T}")
