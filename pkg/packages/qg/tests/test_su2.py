import math

import numpy as np
import pytest

from qg.errors import DegenerateError, DomainError
from qg.su2 import (
    IDENTITY,
    SIGMA_Z,
    QubitState,
    bloch,
    evolve,
    generator,
    ground_state,
    is_unitary,
    state_from_bloch,
)


def _random_unit(rng: np.random.Generator) -> np.ndarray:
    vec = rng.normal(size=3)
    return vec / np.linalg.norm(vec)


def _series_exp(X: np.ndarray, T: float) -> np.ndarray:
    exponent = -1j * T * generator(X)
    total = np.eye(2, dtype=np.complex128)
    term = np.eye(2, dtype=np.complex128)
    for n in range(1, 80):
        term = term @ exponent / n
        total = total + term
    return total


def test_evolve_zero_field_is_identity():
    assert np.allclose(evolve([0.0, 0.0, 0.0], 10.0), IDENTITY, atol=1e-15)


def test_evolve_z_rotation():
    U = evolve([0.0, 0.0, 2.0], math.pi / 2)
    assert np.allclose(U, np.diag([-1j, 1j]), atol=1e-12)


def test_evolve_matches_power_series():
    rng = np.random.default_rng(7)
    for _ in range(25):
        X = rng.normal(size=3)
        T = float(rng.uniform(0.0, 4.0))
        assert np.max(np.abs(evolve(X, T) - _series_exp(X, T))) <= 1e-12


def test_evolve_is_a_group_action_and_unitary():
    rng = np.random.default_rng(11)
    for _ in range(25):
        X = rng.normal(size=3)
        t1, t2 = rng.uniform(0.0, 5.0, size=2)
        combined = evolve(X, float(t1)) @ evolve(X, float(t2))
        assert np.allclose(combined, evolve(X, float(t1 + t2)), atol=1e-12)
        assert is_unitary(evolve(X, float(t1)))


@pytest.mark.parametrize("T", [-1.0, math.inf, math.nan])
def test_evolve_rejects_bad_durations(T: float):
    with pytest.raises(DomainError):
        evolve([1.0, 0.0, 0.0], T)


def test_evolve_rejects_non_finite_field():
    with pytest.raises(DomainError):
        evolve([math.nan, 0.0, 0.0], 1.0)


def test_ground_state_follows_field_direction():
    assert np.allclose(bloch(ground_state([0.0, 0.0, 1.0])), [0.0, 0.0, 1.0])
    assert np.allclose(bloch(ground_state([2.0, 0.0, 0.0])), [1.0, 0.0, 0.0])

    rng = np.random.default_rng(3)
    for _ in range(25):
        X = rng.normal(size=3)
        psi = ground_state(X).array()
        eigenvalue = 0.5 * np.linalg.norm(X)
        assert np.allclose(generator(X) @ psi, eigenvalue * psi, atol=1e-12)


def test_ground_state_of_zero_field_is_degenerate():
    with pytest.raises(DegenerateError):
        ground_state([0.0, 0.0, 0.0])


def test_bloch_of_basis_states():
    assert np.allclose(bloch(QubitState(1 + 0j, 0j)), [0.0, 0.0, 1.0])
    plus = state_from_bloch([1.0, 0.0, 0.0])
    assert plus.amp0 == pytest.approx(1 / math.sqrt(2))
    assert plus.amp1 == pytest.approx(1 / math.sqrt(2))


def test_bloch_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(50):
        r = _random_unit(rng)
        assert np.allclose(bloch(state_from_bloch(r)), r, atol=1e-12)


def test_state_round_trip_up_to_phase():
    rng = np.random.default_rng(9)
    for _ in range(25):
        state = state_from_bloch(_random_unit(rng)).with_phase(float(rng.uniform(0, 6)))
        back = state_from_bloch(bloch(state))
        assert abs(np.vdot(back.array(), state.array())) == pytest.approx(1.0, abs=1e-12)


def test_non_unit_bloch_vector_is_rejected():
    with pytest.raises(DomainError):
        state_from_bloch([1.0, 1.0, 0.0])


def test_unnormalized_state_is_rejected():
    with pytest.raises(DomainError):
        QubitState(1 + 0j, 1 + 0j)


def test_canonical_phase_makes_first_amplitude_real():
    state = QubitState(0.6j, -0.8 + 0j).canonical()
    assert state.amp0 == pytest.approx(0.6)
    assert state.amp1 == pytest.approx(0.8j)


def test_generator_is_half_pauli():
    assert np.allclose(generator([0.0, 0.0, 1.0]), 0.5 * SIGMA_Z)
