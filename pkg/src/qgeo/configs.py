import math
import os
import tomllib
from collections.abc import Mapping
from functools import lru_cache
from typing import Any, Literal, Self

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

THREADS_ENV = "QGEO_THREADS"

ModelId = Literal["canonical", "ssh", "custom"]
Quantity = Literal[
    "qmt",
    "berry",
    "fom",
    "qfim",
    "qcrb",
    "max_qmt",
    "control_qmt",
    "winding",
    "coarse_chern",
]

MODEL_NAMES: dict[str, tuple[str, ...]] = {
    "canonical": ("theta", "phi", "r"),
    "ssh": ("v", "w", "k"),
}


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AxisConfig(_Section):
    name: str = Field(description="Parameter swept along this axis")
    start: float = Field(description="First grid value")
    stop: float = Field(description="Last grid value, included")
    count: int = Field(ge=2, description="Number of grid values")

    @model_validator(mode="after")
    def _non_empty(self) -> Self:
        if self.start == self.stop:
            raise ValueError(f"range of '{self.name}' is empty ({self.start} to {self.stop})")
        return self


class ScanConfig(_Section):
    axes: list[AxisConfig] = Field(
        min_length=1, max_length=2, description="One or two swept parameters, row-major"
    )
    quantities: list[Quantity] = Field(
        default_factory=lambda: ["qmt"], min_length=1, description="Columns to emit per point"
    )


class CustomModelConfig(_Section):
    names: list[str] = Field(min_length=1, description="Parameter names in X(λ)")
    components: list[str] = Field(
        min_length=3, max_length=3, description="Arithmetic expressions for X_x, X_y, X_z"
    )


class FdConfig(_Section):
    step: float = Field(default=1e-5, ge=1e-9, le=1e-2, description="Central difference step")
    scheme: Literal["central", "richardson"] = Field(default="central")


class QuadratureConfig(_Section):
    chern_grid: tuple[int, int] = Field(default=(256, 512), description="(θ, φ) nodes")
    winding_nodes: int = Field(default=4096, ge=16, description="Brillouin-zone nodes")


class AdaptiveConfig(_Section):
    mode: Literal["schedule", "search"] = Field(
        default="schedule", description="Replay a prescribed schedule or search automatically"
    )
    schedule: dict[str, list[float]] = Field(
        default_factory=dict, description="Ordered shifts per parameter"
    )
    policy: Literal["fixed", "shrinking"] = Field(default="shrinking")
    initial_step: float = Field(default=0.3, gt=0.0)
    min_step: float = Field(default=1e-12, gt=0.0)
    eta: float = Field(default=1e-3, gt=0.0, lt=1.0, description="Relative peak tolerance")
    max_iters: int = Field(default=400, ge=1)
    noise_sigma: float = Field(default=0.0, ge=0.0, description="Gaussian QMT noise σ")

    @model_validator(mode="after")
    def _schedule_xor_search(self) -> Self:
        if self.mode == "search" and self.schedule:
            raise ValueError("a schedule cannot be combined with mode = 'search'")
        return self


class VerifyConfig(_Section):
    points: int = Field(default=100, ge=1, description="Random points per closed-form check")
    control_points: int = Field(default=10, ge=1)
    trotter_steps: int = Field(default=10_000, ge=1)
    measurement_points: int = Field(default=20, ge=1)
    tolerance: float = Field(default=1e-6, gt=0.0)


class RunConfig(_Section):
    model: ModelId = Field(default="canonical")
    T: float = Field(default=10.0, gt=0.0, description="Evolution time in units of 1/H0")
    H0: float = Field(default=1.0, gt=0.0, description="Energy scale of the canonical model")
    params: dict[str, float] = Field(default_factory=dict, description="Parameter point")
    probe: Literal["ground", "optimal"] | tuple[float, float, float] = Field(
        default="ground", description="Eigenstate probe, optimal probe, or a Bloch vector"
    )
    optimal_for: str | None = Field(
        default=None, description="Parameter whose QMT the optimal probe maximizes"
    )
    repetitions: int = Field(default=1, ge=1, description="M in the QCRB F⁻¹/M")
    format: Literal["csv", "json"] = Field(default="csv")
    out: str | None = Field(default=None, description="Output path; stdout when absent")
    seed: int | None = Field(default=None)
    custom: CustomModelConfig | None = None
    scan: ScanConfig | None = None
    fd: FdConfig = Field(default_factory=FdConfig)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    adaptive: AdaptiveConfig = Field(default_factory=AdaptiveConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)

    @model_validator(mode="after")
    def _consistent(self) -> Self:
        if self.model == "custom" and self.custom is None:
            raise ValueError("model = 'custom' needs a [custom] table")
        if not math.isfinite(self.T):
            raise ValueError(f"T must be finite, got {self.T}")
        for name, value in self.params.items():
            if not math.isfinite(value):
                raise ValueError(f"params.{name} must be finite, got {value}")
        known = set(self.names)
        unknown = set(self.params) - known
        if unknown:
            raise ValueError(f"params {sorted(unknown)} are not parameters of '{self.model}'")
        if self.optimal_for is not None and self.optimal_for not in known:
            raise ValueError(f"optimal_for '{self.optimal_for}' is not a parameter")
        if self.scan is not None:
            for axis in self.scan.axes:
                if axis.name not in known:
                    raise ValueError(f"scan axis '{axis.name}' is not a parameter")
        return self

    @property
    def names(self) -> tuple[str, ...]:
        if self.model == "custom":
            return tuple(self.custom.names) if self.custom is not None else ()
        return MODEL_NAMES[self.model]


class ConfigError(ValueError): ...


Overrides = tuple[tuple[str, Any], ...]


@lru_cache
def config_load(path: str | None = None, overrides: Overrides = ()) -> RunConfig:
    """
    Reads the TOML file at `path` (defaults only when None), applies the dotted-key
    `overrides` on top and validates the result. Overrides always win over the file.
    """

    payload = _read_from_path(path) if path is not None else {}
    for key, value in overrides:
        _apply_override(payload, key, value)

    try:
        return RunConfig.model_validate(payload)
    except ValidationError as e:
        where = path or "<flags>"
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}"
            for error in e.errors()
        )
        raise ConfigError(f"{where}: {problems}") from e


def scan_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got '{raw}'") from None
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got '{raw}'")
    return threads


def _read_from_path(path: str) -> dict[str, Any]:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except tomllib.TOMLDecodeError as e:
        # the message already carries "(at line L, column C)"
        raise ConfigError(f"{path}: {e}") from None
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path}: not UTF-8 ({e})") from None


def _apply_override(payload: dict[str, Any], key: str, value: Any) -> None:
    if key == "grid":
        _apply_grid(payload, str(value))
        return

    *parents, leaf = key.split(".")
    node = payload
    for part in parents:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"cannot override '{key}': '{part}' is not a table")
        node = child
    node[leaf] = value


def _apply_grid(payload: dict[str, Any], spec: str) -> None:
    try:
        counts = [int(part) for part in spec.lower().split("x")]
    except ValueError:
        raise ConfigError(f"--grid expects N or NxM, got '{spec}'") from None

    scan = payload.get("scan")
    axes = scan.get("axes") if isinstance(scan, Mapping) else None
    if not isinstance(axes, list) or not axes:
        raise ConfigError("--grid needs scan axes in the config file")
    if len(counts) == 1:
        counts = counts * len(axes)
    if len(counts) != len(axes):
        raise ConfigError(f"--grid gives {len(counts)} counts for {len(axes)} axes")
    for axis, count in zip(axes, counts):
        if isinstance(axis, dict):
            axis["count"] = count
