"""
Single-qubit SU(2) arithmetic with J = σ/2 and ħ = 1.
"""

import math

import numpy as np
from attrs import frozen
from numpy.typing import ArrayLike, NDArray

from qg.errors import DegenerateError, DomainError

Vec3 = NDArray[np.float64]
Unitary2 = NDArray[np.complex128]
StateVector = NDArray[np.complex128]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
IDENTITY = np.eye(2, dtype=np.complex128)

NORM_TOLERANCE = 1e-12
BLOCH_TOLERANCE = 1e-9


@frozen
class QubitState:
    amp0: complex
    amp1: complex

    def __attrs_post_init__(self) -> None:
        norm = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if not math.isfinite(norm) or abs(norm - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"state is not normalized: |amp0|^2 + |amp1|^2 = {norm!r}")

    @classmethod
    def from_array(cls, amplitudes: ArrayLike) -> "QubitState":
        vec = np.asarray(amplitudes, dtype=np.complex128)
        if vec.shape != (2,):
            raise DomainError(f"a qubit state needs 2 amplitudes, got shape {vec.shape}")
        return cls(complex(vec[0]), complex(vec[1]))

    def array(self) -> StateVector:
        return np.array([self.amp0, self.amp1], dtype=np.complex128)

    def canonical(self) -> "QubitState":
        """
        Same ray, with amp0 real and non-negative.
        """

        size = abs(self.amp0)
        if size > 0.0:
            phase = size / self.amp0
            return QubitState(complex(size), self.amp1 * phase)
        return QubitState(0j, complex(abs(self.amp1)))

    def with_phase(self, gamma: float) -> "QubitState":
        phase = complex(math.cos(gamma), math.sin(gamma))
        return QubitState(self.amp0 * phase, self.amp1 * phase)


def as_vec3(values: ArrayLike, label: str = "vector") -> Vec3:
    vec = np.asarray(values, dtype=np.float64)
    if vec.shape != (3,):
        raise DomainError(f"{label} must have 3 components, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise DomainError(f"{label} has non-finite components: {vec}")
    return vec


def as_bloch(values: ArrayLike) -> Vec3:
    """
    Validates a pure-state Bloch vector and returns it renormalized to machine precision.
    """

    vec = as_vec3(values, "Bloch vector")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > BLOCH_TOLERANCE:
        raise DomainError(f"Bloch vector of a pure state must be a unit vector, got norm {norm}")
    return vec / norm


def sinc(a: ArrayLike) -> NDArray[np.float64]:
    # unnormalized sin(a)/a, exact at a = 0
    return np.sinc(np.asarray(a, dtype=np.float64) / np.pi)


def generator(X: ArrayLike) -> NDArray[np.complex128]:
    return 0.5 * np.einsum("i,ijk->jk", as_vec3(X, "X"), PAULI)


def evolve(X: ArrayLike, T: float) -> Unitary2:
    """
    e^{-iT X·J} in closed form: cos(|X|T/2) I - i sin(|X|T/2) X̂·σ, continued to the
    identity at |X| = 0.
    """

    x = as_vec3(X, "X")
    if not math.isfinite(T) or T < 0.0:
        raise DomainError(f"evolution time must be finite and non-negative, got {T}")

    half_angle = 0.5 * T * float(np.linalg.norm(x))
    rotation = np.einsum("i,ijk->jk", x, PAULI)
    return np.cos(half_angle) * IDENTITY - 0.5j * T * float(sinc(half_angle)) * rotation


def is_unitary(U: NDArray[np.complex128], tolerance: float = NORM_TOLERANCE) -> bool:
    product = U @ U.conj().T
    return bool(
        np.max(np.abs(product - IDENTITY)) <= tolerance
        and abs(abs(np.linalg.det(U)) - 1.0) <= tolerance
    )


def state_from_bloch(r: ArrayLike) -> QubitState:
    x, y, z = as_bloch(r)
    # angles via atan2 stay well conditioned at both poles
    theta = math.atan2(math.hypot(x, y), z)
    phi = math.atan2(y, x)
    return QubitState(
        complex(math.cos(0.5 * theta)),
        complex(math.cos(phi), math.sin(phi)) * math.sin(0.5 * theta),
    )


def bloch(state: QubitState) -> Vec3:
    coherence = state.amp0.conjugate() * state.amp1
    return np.array(
        [
            2.0 * coherence.real,
            2.0 * coherence.imag,
            abs(state.amp0) ** 2 - abs(state.amp1) ** 2,
        ]
    )


def ground_state(X: ArrayLike) -> QubitState:
    """
    The eigenstate of X·J whose Bloch vector is +X/|X| (eigenvalue +|X|/2).

    This is the state called "ground" throughout the encoding analysis, even though it is
    the upper eigenstate of X·J under the usual sign convention.
    """

    x = as_vec3(X, "X")
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise DegenerateError("X = 0: the eigenbasis of X·J is undefined at this point")
    return state_from_bloch(x / norm)
