"""
Topological invariants and time averages: Chern numbers of Berry-curvature fields, the
winding number of the two-band chiral model, and coarse graining over oscillation windows.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
from attrs import frozen
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import simpson, trapezoid

from qg.errors import DomainError, TransitionPointError

logger = logging.getLogger(__name__)

BerryField = Callable[[NDArray[np.float64], NDArray[np.float64]], ArrayLike]
Series = Callable[[NDArray[np.float64]], ArrayLike]

MIN_CHERN_GRID = 32
CHERN_TOLERANCE = 1e-3
DEFAULT_CHERN_GRID = (256, 512)
DEFAULT_WINDING_NODES = 4096
NODES_PER_PERIOD = 200


@frozen
class ChernEstimate:
    value: float
    coarse_value: float
    delta: float
    converged: bool

    @property
    def rounded(self) -> int:
        return round(self.value)


@frozen
class WindingEstimate:
    closed_form: int
    quadrature: float

    @property
    def value(self) -> int:
        return self.closed_form


def _trapezoid_2d(
    berry_field: BerryField,
    mu_range: tuple[float, float],
    nu_range: tuple[float, float],
    shape: tuple[int, int],
) -> float:
    mu = np.linspace(mu_range[0], mu_range[1], shape[0])
    nu = np.linspace(nu_range[0], nu_range[1], shape[1])
    mu_grid, nu_grid = np.meshgrid(mu, nu, indexing="ij")
    values = np.broadcast_to(np.asarray(berry_field(mu_grid, nu_grid), dtype=np.float64), shape)
    if not np.all(np.isfinite(values)):
        raise DomainError("Berry curvature is not finite on the integration grid")
    return float(trapezoid(trapezoid(values, nu, axis=1), mu))


def chern_number(
    berry_field: BerryField,
    mu_range: tuple[float, float],
    nu_range: tuple[float, float],
    grid: tuple[int, int] = DEFAULT_CHERN_GRID,
) -> ChernEstimate:
    """
    (1/2π) ∬ Ω dλ_μ dλ_ν by the composite trapezoid rule on `grid` nodes and once more on
    the doubled grid (2n - 1 nodes per axis, so every coarse node is reused).

    `berry_field` is evaluated on whole meshgrid arrays at once.
    """

    if min(grid) < MIN_CHERN_GRID:
        raise DomainError(f"Chern grid must be at least {MIN_CHERN_GRID} per axis, got {grid}")

    coarse = _trapezoid_2d(berry_field, mu_range, nu_range, grid) / (2.0 * math.pi)
    fine_shape = (2 * grid[0] - 1, 2 * grid[1] - 1)
    fine = _trapezoid_2d(berry_field, mu_range, nu_range, fine_shape) / (2.0 * math.pi)

    delta = abs(fine - coarse)
    converged = delta <= CHERN_TOLERANCE
    if not converged:
        logger.warning("Chern number refinement did not converge: delta = %.3g", delta)
    return ChernEstimate(value=fine, coarse_value=coarse, delta=delta, converged=converged)


def winding_number(v: float, w: float, nodes: int = DEFAULT_WINDING_NODES) -> WindingEstimate:
    """
    Winding of (v + w cos k, w sin k) around the origin as k runs over the Brillouin zone,
    both from (1 - sgn(v - w))/2 and from trapezoid quadrature of ∂_k arg.
    """

    if not (math.isfinite(v) and math.isfinite(w)) or v < 0.0 or w < 0.0:
        raise DomainError(f"hoppings must be finite and non-negative, got v={v}, w={w}")
    if v == 0.0 and w == 0.0:
        raise DomainError("v = w = 0: the Bloch vector vanishes identically")
    if v == w:
        raise TransitionPointError(f"winding number is undefined at the transition v = w = {v}")
    if nodes < 8:
        raise DomainError(f"winding quadrature needs at least 8 nodes, got {nodes}")

    k = np.linspace(-math.pi, math.pi, nodes + 1)
    chi = v * v + w * w + 2.0 * v * w * np.cos(k)
    integrand = (w * w + v * w * np.cos(k)) / chi
    quadrature = float(trapezoid(integrand, k)) / (2.0 * math.pi)

    closed_form = round((1.0 - math.copysign(1.0, v - w)) / 2.0)
    return WindingEstimate(closed_form=closed_form, quadrature=quadrature)


def coarse_grain(
    series: Series,
    window: float,
    center: float = 0.0,
    period: float | None = None,
) -> float:
    """
    (1/window) ∫ series(t) dt over [center - window/2, center + window/2] by composite
    Simpson quadrature with at least 200 nodes per oscillation `period` (the whole window
    counts as one period when none is given).
    """

    if not math.isfinite(window) or window <= 0.0:
        raise DomainError(f"coarse-graining window must be positive, got {window}")
    if period is not None and (not math.isfinite(period) or period <= 0.0):
        raise DomainError(f"oscillation period must be positive, got {period}")

    periods = 1.0 if period is None else max(window / period, 1.0)
    intervals = 2 * math.ceil(0.5 * NODES_PER_PERIOD * periods)
    t = np.linspace(center - 0.5 * window, center + 0.5 * window, intervals + 1)
    values = np.broadcast_to(np.asarray(series(t), dtype=np.float64), t.shape)
    if not np.all(np.isfinite(values)):
        raise DomainError("time series is not finite inside the coarse-graining window")
    return float(simpson(values, x=t)) / window


def coarse_grain_sin2(amplitude: float = 1.0) -> float:
    """
    Long-window average of amplitude·sin²(ωt).
    """

    return 0.5 * amplitude
