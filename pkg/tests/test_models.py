import math

import numpy as np
import pytest
from qg import DegenerateError, DomainError, TransitionPointError, chern_number, coarse_grain
from qg.geometry import berry, gauge_factor, geometry_report, incompatibility_residual, qmt
from qg.oracle import FdSpec, qgt_fd, qgt_fd_states
from qg.su2 import bloch, ground_state

from qgeo import models
from qgeo.models import CanonicalParams, SshParams

T = 10.0


def _random_canonical(rng: np.random.Generator) -> CanonicalParams:
    return CanonicalParams(
        theta=float(rng.uniform(0.1, math.pi - 0.1)),
        phi=float(rng.uniform(0.0, 2.0 * math.pi)),
        r=float(rng.uniform(0.0, 2.0)),
    )


def _random_ssh(rng: np.random.Generator) -> SshParams:
    return SshParams(
        v=float(rng.uniform(0.0, 2.0)),
        w=float(rng.uniform(0.2, 2.0)),
        k=float(rng.uniform(-math.pi + 0.1, math.pi - 0.1)),
    )


def _ground_probe(field, point) -> np.ndarray:
    return bloch(ground_state(field.at(point)))


def test_canonical_field_values():
    field = models.canonical_field()
    assert np.allclose(field.at({"theta": math.pi, "phi": 0.3, "r": 1.0}), 0.0, atol=1e-15)
    assert np.allclose(field.at({"theta": math.pi / 2, "phi": 0.0, "r": 0.0}), [2.0, 0.0, 0.0])


def test_ssh_field_values():
    field = models.ssh_field()
    assert np.allclose(field.at({"v": 1.0, "w": 1.0, "k": math.pi}), 0.0, atol=1e-15)
    assert np.allclose(field.at({"v": 0.0, "w": 1.0, "k": math.pi / 2}), [0.0, 2.0, 0.0])


def test_partials_match_finite_differences():
    rng = np.random.default_rng(1)
    canonical = models.canonical_field(H0=1.3)
    ssh = models.ssh_field()
    for _ in range(100):
        assert canonical.partials_deviation(_random_canonical(rng).point()) <= 1e-8
        assert ssh.partials_deviation(_random_ssh(rng).point()) <= 1e-8


def test_params_are_validated():
    with pytest.raises(DomainError):
        CanonicalParams(theta=4.0, phi=0.0, r=0.5)
    with pytest.raises(DomainError):
        CanonicalParams(theta=1.0, phi=-0.1, r=0.5)
    with pytest.raises(DomainError):
        SshParams(v=-1.0, w=1.0, k=0.0)
    with pytest.raises(DomainError):
        SshParams(v=1.0, w=1.0, k=4.0)


def test_tpt_predicates():
    assert CanonicalParams(theta=math.pi, phi=0.0, r=1.0).is_tpt()
    assert not models.canonical_limit_params().is_tpt()
    assert SshParams(v=1.0, w=1.0, k=-math.pi).is_tpt()
    assert not models.ssh_limit_params().is_tpt()


@pytest.mark.parametrize(("delta", "expected"), [(0.0, 100.0), (0.1, 99.9271), (0.5, 94.1155)])
def test_maximal_qmt_near_the_transition(delta: float, expected: float):
    canonical = CanonicalParams(theta=math.pi - delta, phi=0.0, r=1.0)
    assert models.max_qmt_canonical(canonical, T)[0] == pytest.approx(expected, abs=5e-4)

    ssh = SshParams(v=1.0, w=1.0, k=math.pi - delta)
    assert models.max_qmt_ssh(ssh, T)[2] == pytest.approx(expected, abs=5e-4)


def test_maximal_phi_qmt_vanishes_at_theta_pi():
    for r in (0.0, 0.5, 1.0, 3.0):
        p = CanonicalParams(theta=math.pi, phi=1.0, r=r)
        assert models.max_qmt_canonical(p, 7.0)[1] == pytest.approx(0.0, abs=1e-20)


def test_maximal_qmt_matches_gauge_magnitude():
    rng = np.random.default_rng(2)
    canonical = models.canonical_field(H0=0.7)
    ssh = models.ssh_field()
    for _ in range(50):
        p = _random_canonical(rng)
        p = CanonicalParams(p.theta, p.phi, p.r, H0=0.7)
        closed = models.max_qmt_canonical(p, T)
        for name, value in zip(models.CANONICAL_NAMES, closed):
            factor = gauge_factor(canonical, p.point(), name, T)
            assert value == pytest.approx(factor.magnitude**2 / 4, rel=1e-9, abs=1e-12)

        q = _random_ssh(rng)
        closed = models.max_qmt_ssh(q, T)
        for name, value in zip(models.SSH_NAMES, closed):
            factor = gauge_factor(ssh, q.point(), name, T)
            assert value == pytest.approx(factor.magnitude**2 / 4, rel=1e-9, abs=1e-12)


def test_maximal_and_ground_diagonals_on_the_limit_path():
    canonical = models.canonical_limit_params()
    peak = models.max_qmt_canonical(canonical, T)
    assert peak == pytest.approx((T**2, 0.0, T**2), rel=1e-3, abs=1e-6)

    ground = models.ground_qmt_matrix_canonical(canonical, T)
    limit = 0.5 * T**2 * np.array([[1.0, 0.0, -1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 1.0]])
    assert np.allclose(ground, limit, rtol=1e-3, atol=1e-3)
    assert ground[0, 0] + ground[2, 2] == pytest.approx(T**2, rel=1e-3)

    ssh = models.ssh_limit_params()
    assert models.max_qmt_ssh(ssh, T) == pytest.approx((T**2, T**2, T**2), rel=1e-3)
    ground_ssh = models.ground_qmt_matrix_ssh(ssh, T)
    limit_ssh = 0.5 * T**2 * np.array([[1.0, -1.0, -1.0], [-1.0, 1.0, 1.0], [-1.0, 1.0, 1.0]])
    assert np.allclose(ground_ssh, limit_ssh, rtol=1e-3, atol=1e-3)


def test_gauge_directions_on_the_limit_path():
    phi0 = 0.8
    canonical = models.canonical_limit_params(phi=phi0)
    e_theta = gauge_factor(models.canonical_field(), canonical.point(), "theta", T).direction
    assert np.allclose(e_theta, [math.cos(phi0), math.sin(phi0), 0.0], atol=1e-4)

    ssh = models.ssh_limit_params()
    e_k = gauge_factor(models.ssh_field(), ssh.point(), "k", T).direction
    assert np.allclose(e_k, [0.0, 1.0, 0.0], atol=1e-4)


def test_closed_forms_refuse_the_transition_point():
    with pytest.raises(DegenerateError):
        models.ground_qmt_matrix_canonical(CanonicalParams(theta=math.pi, phi=0.0, r=1.0), T)
    with pytest.raises(DegenerateError):
        models.ground_berry_matrix_canonical(CanonicalParams(theta=math.pi, phi=0.0, r=1.0), T)
    with pytest.raises(DegenerateError):
        models.ground_qmt_matrix_ssh(SshParams(v=1.0, w=1.0, k=math.pi), T)


def test_canonical_berry_substitution():
    p = CanonicalParams(theta=math.pi / 2, phi=0.4, r=0.0)
    for duration in (0.3, 1.7, 10.0):
        omega = models.ground_berry_matrix_canonical(p, duration)
        assert omega[0, 1] == pytest.approx(2.0 * math.sin(duration) ** 2, abs=1e-12)


def test_ssh_qmt_substitution():
    p = SshParams(v=0.0, w=1.0, k=math.pi / 2)
    for duration in (0.3, 1.7, 10.0):
        G = models.ground_qmt_matrix_ssh(p, duration)
        assert G[0, 0] == pytest.approx(math.sin(duration) ** 2, abs=1e-12)


def test_canonical_ground_matrices_match_the_general_geometry():
    rng = np.random.default_rng(3)
    field = models.canonical_field()
    for _ in range(100):
        p = _random_canonical(rng)
        probe = _ground_probe(field, p.point())
        report = geometry_report(field, p.point(), probe, T)
        assert np.allclose(report.qmt, models.ground_qmt_matrix_canonical(p, T), atol=1e-9)
        assert np.allclose(-report.berry, models.ground_berry_matrix_canonical(p, T), atol=1e-9)
        assert report.berry[0, 2] == pytest.approx(0.0, abs=1e-10)


def test_ssh_ground_matrices_match_the_general_geometry():
    rng = np.random.default_rng(4)
    field = models.ssh_field()
    for _ in range(100):
        p = _random_ssh(rng)
        report = geometry_report(field, p.point(), _ground_probe(field, p.point()), T)
        assert np.allclose(report.qmt, models.ground_qmt_matrix_ssh(p, T), atol=1e-9)
        assert np.allclose(report.berry, models.ground_berry_matrix_ssh(p, T), atol=1e-9)
        assert np.allclose(report.fom, 0.0, atol=1e-6)


def test_ground_probe_curvatures_vanish_for_any_duration():
    rng = np.random.default_rng(11)
    canonical = models.canonical_field()
    ssh = models.ssh_field()
    for _ in range(1000):
        duration = float(rng.uniform(0.1, 20.0))
        p = _random_canonical(rng)
        theta = gauge_factor(canonical, p.point(), "theta", duration)
        r = gauge_factor(canonical, p.point(), "r", duration)
        probe = _ground_probe(canonical, p.point())
        assert berry(theta, r, probe) == pytest.approx(0.0, abs=1e-9)

        q = _random_ssh(rng)
        probe = _ground_probe(ssh, q.point())
        factors = [gauge_factor(ssh, q.point(), name, duration) for name in models.SSH_NAMES]
        for i, f_mu in enumerate(factors):
            for f_nu in factors[i + 1 :]:
                assert berry(f_mu, f_nu, probe) == pytest.approx(0.0, abs=1e-9)


def test_canonical_directions_admit_no_compatible_probe():
    rng = np.random.default_rng(12)
    field = models.canonical_field()
    for _ in range(10):
        p = _random_canonical(rng)
        e_theta = gauge_factor(field, p.point(), "theta", T).direction
        e_phi = gauge_factor(field, p.point(), "phi", T).direction
        assert incompatibility_residual(e_theta, e_phi) > 0.1


def test_ground_matrices_match_the_finite_difference_oracle():
    rng = np.random.default_rng(5)
    spec = FdSpec(scheme="richardson")
    canonical = models.canonical_field()
    ssh = models.ssh_field()
    for _ in range(20):
        p = _random_canonical(rng)
        chi = qgt_fd(canonical, p.point(), _ground_probe(canonical, p.point()), T, spec)
        assert np.allclose(chi.real, models.ground_qmt_matrix_canonical(p, T), atol=1e-6)

        q = _random_ssh(rng)
        chi = qgt_fd(ssh, q.point(), _ground_probe(ssh, q.point()), T, spec)
        assert np.allclose(chi.real, models.ground_qmt_matrix_ssh(q, T), atol=1e-6)


def test_diagonal_bound_chain():
    rng = np.random.default_rng(6)
    field = models.canonical_field()
    for _ in range(1000):
        p = _random_canonical(rng)
        ground = np.diag(models.ground_qmt_matrix_canonical(p, T))
        peak = models.max_qmt_canonical(p, T)
        for name, g, m in zip(models.CANONICAL_NAMES, ground, peak):
            bound = T**2 * float(np.linalg.norm(field.derivative(p.point(), name))) ** 2 / 4
            assert g <= m + 1e-9
            assert m <= bound + 1e-9


def test_ground_fom_matrix():
    p = CanonicalParams(theta=2.1, phi=0.5, r=0.4)
    R = models.ground_fom_matrix_canonical(p, T)
    assert R[0, 1] == pytest.approx(1.0, abs=1e-6)
    assert R[1, 2] == pytest.approx(1.0, abs=1e-6)
    assert R[0, 2] == 0.0
    assert np.allclose(R, R.T)


def test_coarse_chern_numbers():
    assert abs(models.coarse_chern_canonical(0.5)) == 2.0
    assert models.coarse_chern_canonical(1.5) == 0.0
    with pytest.raises(TransitionPointError):
        models.coarse_chern_canonical(1.0)

    assert abs(models.coarse_chern_quadrature(0.5).value) == pytest.approx(2.0, abs=1e-3)
    assert models.coarse_chern_quadrature(1.5).value == pytest.approx(0.0, abs=1e-3)


def test_coarse_invariant_is_twice_the_static_one():
    for r in (0.0, 0.3, 0.8, 1.4):
        assert abs(models.coarse_chern_canonical(r)) == 2 * abs(models.static_chern_canonical(r))

    static = chern_number(
        lambda theta, phi: models.static_berry_canonical(theta, phi, 0.5),
        (0.0, math.pi),
        (0.0, 2.0 * math.pi),
    )
    assert static.value == pytest.approx(models.static_chern_canonical(0.5), abs=1e-3)


def test_static_curvature_matches_the_eigenstate_geometry():
    p = CanonicalParams(theta=1.2, phi=0.7, r=0.3)
    field = models.canonical_field()

    def state_at(point):
        return ground_state(field.at(point)).array()

    chi = qgt_fd_states(state_at, p.point(), ("theta", "phi"), FdSpec(scheme="richardson"))
    expected = float(models.static_berry_canonical(p.theta, p.phi, p.r))
    assert -2.0 * chi[0, 1].imag == pytest.approx(expected, abs=1e-7)


def test_coarse_berry_is_the_time_average():
    p = CanonicalParams(theta=2.0, phi=0.3, r=0.4)
    xi = (1 + p.r * math.cos(p.theta)) ** 2 + (p.r * math.sin(p.theta)) ** 2
    period = math.pi / (p.H0 * math.sqrt(xi))

    def series(durations: np.ndarray) -> np.ndarray:
        return np.array(
            [models.ground_berry_matrix_canonical(p, float(d))[0, 1] for d in durations]
        )

    average = coarse_grain(series, 20 * period, center=50 * period, period=period)
    assert average == pytest.approx(models.coarse_berry_canonical(p)[0, 1], abs=1e-3)


def test_berry_and_qmt_helpers_agree_with_reports():
    field = models.canonical_field()
    p = CanonicalParams(theta=1.0, phi=2.0, r=0.6)
    probe = _ground_probe(field, p.point())
    f_theta = gauge_factor(field, p.point(), "theta", T)
    f_phi = gauge_factor(field, p.point(), "phi", T)
    report = geometry_report(field, p.point(), probe, T)
    assert qmt(f_theta, f_phi, probe) == pytest.approx(report.qmt[0, 1], abs=1e-12)
    assert berry(f_theta, f_phi, probe) == pytest.approx(report.berry[0, 1], abs=1e-12)
