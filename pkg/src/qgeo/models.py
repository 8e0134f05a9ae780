"""
The two topological models and their closed-form geometry.

Canonical model: X = 2H₀(sinθ cosφ, sinθ sinφ, cosθ + r), transition at θ = π, r = 1.
SSH model: X = 2(v + w cos k, w sin k, 0), transition at v = w, k = ±π.

Closed forms are written with ξ = (1 + r cosθ)² + (r sinθ)² = |X|²/4H₀² and
χ = (v + w cos k)² + (w sin k)² = |X|²/4; both vanish only at the transition.
"""

import math

import numpy as np
from attrs import frozen
from numpy.typing import ArrayLike, NDArray
from qg import DegenerateError, DomainError, HamiltonianField, TransitionPointError
from qg.geometry import Point, RealMatrix, fom
from qg.su2 import sinc
from qg.topology import ChernEstimate, chern_number

TPT_TOLERANCE = 1e-9
LIMIT_EPSILON = 1e-6
# |X|²/4H₀² below this is the transition point itself (sin π² ≈ 1.5e-32)
DEGENERATE_NORM2 = 1e-28

CANONICAL_NAMES = ("theta", "phi", "r")
SSH_NAMES = ("v", "w", "k")


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value}")


@frozen
class CanonicalParams:
    theta: float
    phi: float
    r: float
    H0: float = 1.0

    def __attrs_post_init__(self) -> None:
        _check_finite(theta=self.theta, phi=self.phi, r=self.r, H0=self.H0)
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"theta must lie in [0, π], got {self.theta}")
        if not 0.0 <= self.phi <= 2.0 * math.pi:
            raise DomainError(f"phi must lie in [0, 2π], got {self.phi}")
        if self.H0 <= 0.0:
            raise DomainError(f"H0 must be positive, got {self.H0}")

    def point(self) -> dict[str, float]:
        return {"theta": self.theta, "phi": self.phi, "r": self.r}

    def is_tpt(self, tol: float = TPT_TOLERANCE) -> bool:
        return abs(self.r - 1.0) < tol and abs(self.theta - math.pi) < tol


@frozen
class SshParams:
    v: float
    w: float
    k: float

    def __attrs_post_init__(self) -> None:
        _check_finite(v=self.v, w=self.w, k=self.k)
        if self.v < 0.0 or self.w < 0.0:
            raise DomainError(f"hoppings must be non-negative, got v={self.v}, w={self.w}")
        if not -math.pi <= self.k <= math.pi:
            raise DomainError(f"k must lie in [-π, π], got {self.k}")

    def point(self) -> dict[str, float]:
        return {"v": self.v, "w": self.w, "k": self.k}

    def is_tpt(self, tol: float = TPT_TOLERANCE) -> bool:
        return abs(self.v - self.w) < tol and abs(abs(self.k) - math.pi) < tol


def canonical_field(H0: float = 1.0) -> HamiltonianField:
    scale = 2.0 * H0

    def value(p: Point) -> list[float]:
        theta, phi, r = p["theta"], p["phi"], p["r"]
        return [
            scale * math.sin(theta) * math.cos(phi),
            scale * math.sin(theta) * math.sin(phi),
            scale * (math.cos(theta) + r),
        ]

    def partial(p: Point, name: str) -> list[float]:
        theta, phi = p["theta"], p["phi"]
        match name:
            case "theta":
                return [
                    scale * math.cos(theta) * math.cos(phi),
                    scale * math.cos(theta) * math.sin(phi),
                    -scale * math.sin(theta),
                ]
            case "phi":
                return [
                    -scale * math.sin(theta) * math.sin(phi),
                    scale * math.sin(theta) * math.cos(phi),
                    0.0,
                ]
            case _:
                return [0.0, 0.0, scale]

    return HamiltonianField(names=CANONICAL_NAMES, value=value, partial=partial, label="canonical")


def ssh_field() -> HamiltonianField:
    def value(p: Point) -> list[float]:
        v, w, k = p["v"], p["w"], p["k"]
        return [2.0 * (v + w * math.cos(k)), 2.0 * w * math.sin(k), 0.0]

    def partial(p: Point, name: str) -> list[float]:
        w, k = p["w"], p["k"]
        match name:
            case "v":
                return [2.0, 0.0, 0.0]
            case "w":
                return [2.0 * math.cos(k), 2.0 * math.sin(k), 0.0]
            case _:
                return [-2.0 * w * math.sin(k), 2.0 * w * math.cos(k), 0.0]

    return HamiltonianField(names=SSH_NAMES, value=value, partial=partial, label="ssh")


def _xi(theta: float, r: float) -> float:
    return (1.0 + r * math.cos(theta)) ** 2 + (r * math.sin(theta)) ** 2


def _chi(v: float, w: float, k: float) -> float:
    return (v + w * math.cos(k)) ** 2 + (w * math.sin(k)) ** 2


def _sinc2(a: float) -> float:
    return float(sinc(a)) ** 2


def canonical_peak_qmt(
    theta: float, r: float, T: float, H0: float = 1.0
) -> tuple[float, float, float]:
    """
    Maximal QMTs (g_θθ, g_φφ, g_rr) of the canonical model, attained by any probe orthogonal
    to the respective e_ℓ. No range checks: adaptive paths may step past θ = π.
    """

    t = T * H0
    xi = _xi(theta, r)
    s2 = _sinc2(t * math.sqrt(xi))
    sin2 = math.sin(theta) ** 2
    g_phi = t * t * sin2 * s2
    if xi < DEGENERATE_NORM2:
        return t * t, g_phi, t * t

    g_theta = t * t * ((r * math.sin(theta)) ** 2 + (1.0 + r * math.cos(theta)) ** 2 * s2) / xi
    g_r = t * t * ((r + math.cos(theta)) ** 2 + sin2 * s2) / xi
    return g_theta, g_phi, g_r


def ssh_peak_qmt(k: float, v: float, w: float, T: float) -> tuple[float, float, float]:
    """
    Maximal QMTs (g_vv, g_ww, g_kk) of the SSH model.
    """

    chi = _chi(v, w, k)
    s2 = _sinc2(T * math.sqrt(chi))
    if chi < DEGENERATE_NORM2:
        return T * T, T * T, T * T * w * w

    sin_k, cos_k = math.sin(k), math.cos(k)
    g_v = T * T * ((v + w * cos_k) ** 2 + (w * sin_k) ** 2 * s2) / chi
    g_w = T * T * ((w + v * cos_k) ** 2 + (v * sin_k) ** 2 * s2) / chi
    g_k = T * T * w * w * ((v * sin_k) ** 2 + (w + v * cos_k) ** 2 * s2) / chi
    return g_v, g_w, g_k


def max_qmt_canonical(p: CanonicalParams, T: float) -> tuple[float, float, float]:
    _check_duration(T)
    return canonical_peak_qmt(p.theta, p.r, T, p.H0)


def max_qmt_ssh(p: SshParams, T: float) -> tuple[float, float, float]:
    _check_duration(T)
    return ssh_peak_qmt(p.k, p.v, p.w, T)


def _canonical_weight(p: CanonicalParams, T: float) -> tuple[float, float]:
    # (ξ, sin²(TH₀√ξ)/ξ²); the transition point itself is refused
    _check_duration(T)
    xi = _xi(p.theta, p.r)
    if xi < DEGENERATE_NORM2:
        raise DegenerateError(
            "closed forms are 0/0 at the transition θ = π, r = 1; evaluate along a limit path"
        )
    t = T * p.H0
    return xi, t * t * _sinc2(t * math.sqrt(xi)) / xi


def ground_qmt_matrix_canonical(p: CanonicalParams, T: float) -> RealMatrix:
    """
    QMT over (θ, φ, r) seen by the eigenstate probe aligned with X.
    """

    xi, s = _canonical_weight(p, T)
    b = 1.0 + p.r * math.cos(p.theta)
    sin_t = math.sin(p.theta)
    return np.array(
        [
            [b * b * s, 0.0, -b * sin_t * s],
            [0.0, sin_t * sin_t * xi * s, 0.0],
            [-b * sin_t * s, 0.0, sin_t * sin_t * s],
        ]
    )


def ground_berry_matrix_canonical(p: CanonicalParams, T: float) -> RealMatrix:
    """
    Berry curvature matrix over (θ, φ, r) for the eigenstate probe in the closed-form sign
    convention, which is minus `qg.berry` evaluated on the same pair.
    """

    xi, s = _canonical_weight(p, T)
    b = 1.0 + p.r * math.cos(p.theta)
    sin_t = math.sin(p.theta)
    root = math.sqrt(xi)
    theta_phi = 2.0 * sin_t * b * s * root
    phi_r = 2.0 * sin_t * sin_t * s * root
    return np.array(
        [
            [0.0, theta_phi, 0.0],
            [-theta_phi, 0.0, phi_r],
            [0.0, -phi_r, 0.0],
        ]
    )


def ground_fom_matrix_canonical(p: CanonicalParams, T: float) -> RealMatrix:
    g = ground_qmt_matrix_canonical(p, T)
    omega = ground_berry_matrix_canonical(p, T)
    merit = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            if i != j:
                merit[i, j] = fom(g[i, i], g[j, j], g[i, j], omega[i, j])
    return merit


def coarse_berry_theta_phi(
    theta: ArrayLike, phi: ArrayLike, r: float
) -> NDArray[np.float64]:
    """
    Coarse-grained Ω̄_θφ = (1 + r cosθ) sinθ / ξ^{3/2}, vectorized for quadrature.
    """

    theta_arr = np.asarray(theta, dtype=np.float64)
    b = 1.0 + r * np.cos(theta_arr)
    xi = b * b + (r * np.sin(theta_arr)) ** 2
    values = b * np.sin(theta_arr) / xi**1.5
    return np.broadcast_to(values, np.broadcast_shapes(theta_arr.shape, np.shape(phi)))


def coarse_berry_canonical(p: CanonicalParams) -> RealMatrix:
    xi = _xi(p.theta, p.r)
    if xi < DEGENERATE_NORM2:
        raise DegenerateError("coarse-grained curvature diverges at the transition θ = π, r = 1")
    sin_t = math.sin(p.theta)
    theta_phi = (1.0 + p.r * math.cos(p.theta)) * sin_t / xi**1.5
    phi_r = sin_t * sin_t / xi**1.5
    return np.array(
        [
            [0.0, theta_phi, 0.0],
            [-theta_phi, 0.0, phi_r],
            [0.0, -phi_r, 0.0],
        ]
    )


def coarse_chern_canonical(r: float) -> float:
    """
    Coarse-grained Chern number in its sign-function form, (sgn(r-1) - 1) sgn(r²-1) / sgn(r-1).

    Defined for r ≥ 0; r = 1 is the transition.
    """

    _check_finite(r=r)
    if r < 0.0:
        raise DomainError(f"the coarse Chern closed form is stated for r >= 0, got {r}")
    if r == 1.0:
        raise TransitionPointError("coarse-grained Chern number is undefined at r = 1")
    sgn = math.copysign(1.0, r - 1.0)
    return (sgn - 1.0) * float(np.sign(r * r - 1.0)) / sgn


def coarse_chern_quadrature(r: float, grid: tuple[int, int] = (256, 512)) -> ChernEstimate:
    if abs(r) == 1.0:
        raise TransitionPointError(f"coarse-grained curvature is singular on the sphere at r = {r}")
    return chern_number(
        lambda theta, phi: coarse_berry_theta_phi(theta, phi, r),
        (0.0, math.pi),
        (0.0, 2.0 * math.pi),
        grid,
    )


def static_berry_canonical(theta: ArrayLike, phi: ArrayLike, r: float) -> NDArray[np.float64]:
    """
    Ω_θφ of the static eigenstate aligned with X, -½ X̂·(∂_θX̂ × ∂_φX̂).
    """

    return -0.5 * coarse_berry_theta_phi(theta, phi, r)


def static_chern_canonical(r: float) -> int:
    _check_finite(r=r)
    if abs(r) == 1.0:
        raise TransitionPointError(f"static Chern number is undefined at r = {r}")
    return -1 if abs(r) < 1.0 else 0


def ground_qmt_matrix_ssh(p: SshParams, T: float) -> RealMatrix:
    """
    QMT over (v, w, k) seen by the eigenstate probe aligned with X.
    """

    _check_duration(T)
    chi = _chi(p.v, p.w, p.k)
    if chi < DEGENERATE_NORM2:
        raise DegenerateError(
            "closed forms are 0/0 at the transition v = w, k = ±π; evaluate along a limit path"
        )
    s = T * T * _sinc2(T * math.sqrt(chi)) / chi
    v, w = p.v, p.w
    sin_k = math.sin(p.k)
    c = w + v * math.cos(p.k)
    return s * np.array(
        [
            [w * w * sin_k**2, -v * w * sin_k**2, -w * w * c * sin_k],
            [-v * w * sin_k**2, v * v * sin_k**2, v * w * c * sin_k],
            [-w * w * c * sin_k, v * w * c * sin_k, w * w * c * c],
        ]
    )


def ground_berry_matrix_ssh(p: SshParams, T: float) -> RealMatrix:
    # with X confined to the xy plane, (Y_μ × Y_ν)·X̂ cancels pairwise
    _check_duration(T)
    if _chi(p.v, p.w, p.k) < DEGENERATE_NORM2:
        raise DegenerateError("the eigenstate probe is undefined at the SSH transition")
    return np.zeros((3, 3))


def canonical_limit_params(
    eps: float = LIMIT_EPSILON, phi: float = 0.0, H0: float = 1.0
) -> CanonicalParams:
    return CanonicalParams(theta=math.pi - eps, phi=phi, r=1.0 - eps, H0=H0)


def ssh_limit_params(eps: float = LIMIT_EPSILON, w: float = 1.0) -> SshParams:
    return SshParams(v=w - eps, w=w, k=math.pi - eps)


def _check_duration(T: float) -> None:
    if not math.isfinite(T) or T <= 0.0:
        raise DomainError(f"evolution time must be positive and finite, got {T}")
