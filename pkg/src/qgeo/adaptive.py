"""
Adaptive estimation toward a topological transition: parameters are shifted step by step
until the QMT of every transition-related parameter reaches its peak, and the initial values
are read back from the critical point minus the accumulated shifts.
"""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Iterable, Mapping, Sequence
from typing import Literal

import attrs
import numpy as np
from attrs import define, frozen
from qg import DomainError, HamiltonianField, TransitionPointError, winding_number
from qg.geometry import gauge_factor, qmt
from qg.su2 import Vec3

from qgeo import models
from qgeo.control import residual_hamiltonian

logger = logging.getLogger(__name__)

SIDE_TOLERANCE = 1e-12
DEFAULT_MAX_ITERS = 400


def _as_steps(value: Mapping[str, Iterable[float]]) -> dict[str, tuple[float, ...]]:
    steps = {name: tuple(float(x) for x in deltas) for name, deltas in value.items()}
    for name, deltas in steps.items():
        if not all(math.isfinite(x) for x in deltas):
            raise DomainError(f"steps for '{name}' must be finite, got {deltas}")
    return steps


@frozen
class StepSchedule:
    """
    Ordered shifts per parameter. Replay interleaves them by index: the i-th shift of each
    parameter in model order, then the (i+1)-th.
    """

    steps: dict[str, tuple[float, ...]] = attrs.field(converter=_as_steps, factory=dict)

    def ordered(self, names: Sequence[str]) -> list[tuple[str, float]]:
        unknown = set(self.steps) - set(names)
        if unknown:
            raise DomainError(f"schedule names unknown parameters {sorted(unknown)}")
        depth = max((len(self.steps.get(name, ())) for name in names), default=0)
        return [
            (name, self.steps[name][i])
            for i in range(depth)
            for name in names
            if i < len(self.steps.get(name, ()))
        ]


@frozen
class PeakCriterion:
    eta: float = attrs.field(default=1e-3)

    @eta.validator
    def _check_eta(self, _: object, value: float) -> None:
        if not 0.0 < value < 1.0:
            raise DomainError(f"peak tolerance must lie in (0, 1), got {value}")

    def met(self, measured: Mapping[str, float], references: Mapping[str, float]) -> bool:
        return all(measured[name] >= (1.0 - self.eta) * references[name] for name in references)


@frozen
class StepPolicy:
    kind: Literal["fixed", "shrinking"] = "shrinking"
    initial_step: float = 0.3
    min_step: float = 1e-12

    def __attrs_post_init__(self) -> None:
        if not self.initial_step > 0.0 or not self.min_step > 0.0:
            raise DomainError(
                f"step sizes must be positive, got {self.initial_step} and {self.min_step}"
            )


@frozen
class AdaptiveStep:
    iteration: int
    parameter: str | None
    step: float
    values: dict[str, float]
    cumulative: dict[str, float]
    qmt: float
    probe_qmt: float
    residual_norm: float
    estimates: dict[str, float]
    deviations: dict[str, float]


@define
class AdaptiveTrace:
    model: str
    peak_parameter: str
    records: list[AdaptiveStep] = attrs.field(factory=list)
    estimates: dict[str, float] = attrs.field(factory=dict)
    deviations: dict[str, float] = attrs.field(factory=dict)
    converged: bool = False

    @property
    def status(self) -> str:
        return "converged" if self.converged else "not_converged"

    @property
    def qmt_values(self) -> list[float]:
        return [record.qmt for record in self.records]


class TptModel(ABC):
    """
    A model seen from its transition point: the two tunable parameters, their critical
    values, the peak QMT each reaches there, and which side of the transition a point is on.
    """

    label: str
    names: tuple[str, str]
    peak_parameter: str

    @abstractmethod
    def field(self) -> HamiltonianField: ...

    @abstractmethod
    def critical(self, values: Mapping[str, float] | None = None) -> dict[str, float]:
        """
        The transition point, or with `values` the copy of it that a walk from there reaches.
        """

        ...


    @abstractmethod
    def full_point(self, values: Mapping[str, float]) -> dict[str, float]: ...

    @abstractmethod
    def peak_qmts(self, values: Mapping[str, float], T: float) -> dict[str, float]: ...

    @abstractmethod
    def references(self, T: float) -> dict[str, float]: ...

    @abstractmethod
    def probe(self) -> Vec3: ...

    @abstractmethod
    def side(self, name: str, values: Mapping[str, float]) -> int:
        """
        +1 when the parameter sits below its critical value, -1 above, 0 on it.
        """

        ...


def _normalized(vector: Sequence[float]) -> Vec3:
    array = np.asarray(vector, dtype=np.float64)
    return array / np.linalg.norm(array)


@frozen
class CanonicalTpt(TptModel):
    phi0: float = 0.0
    H0: float = 1.0
    c_x: float = 1.0
    c_z: float = 1.0

    label = "canonical"
    names = ("theta", "r")
    peak_parameter = "theta"

    def field(self) -> HamiltonianField:
        return models.canonical_field(self.H0)

    def critical(self, values: Mapping[str, float] | None = None) -> dict[str, float]:
        return {"theta": math.pi, "r": 1.0}

    def full_point(self, values: Mapping[str, float]) -> dict[str, float]:
        return {"theta": values["theta"], "phi": self.phi0, "r": values["r"]}

    def peak_qmts(self, values: Mapping[str, float], T: float) -> dict[str, float]:
        g_theta, _, g_r = models.canonical_peak_qmt(values["theta"], values["r"], T, self.H0)
        return {"theta": g_theta, "r": g_r}

    def references(self, T: float) -> dict[str, float]:
        peak = (T * self.H0) ** 2
        return {"theta": peak, "r": peak}

    def probe(self) -> Vec3:
        # (c_x, -c_x/tanφ₀, c_z) is orthogonal to the limiting e_θ ∝ (cosφ₀, sinφ₀, 0)
        tangent = math.tan(self.phi0)
        if abs(tangent) < SIDE_TOLERANCE:
            return _normalized([-math.sin(self.phi0), math.cos(self.phi0), 0.0])
        return _normalized([self.c_x, -self.c_x / tangent, self.c_z])

    def side(self, name: str, values: Mapping[str, float]) -> int:
        match name:
            case "theta":
                sin_t = math.sin(values["theta"])
                if abs(sin_t) < SIDE_TOLERANCE:
                    return 0
                return 1 if sin_t > 0.0 else -1
            case _:
                r = values["r"]
                if r < 0.0:
                    return 1
                try:
                    chern = models.coarse_chern_canonical(r)
                except TransitionPointError:
                    return 0
                return 1 if abs(chern) > 1.0 else -1


@frozen
class SshTpt(TptModel):
    w0: float = 1.0
    d_x: float = 1.0
    d_z: float = 1.0

    label = "ssh"
    names = ("k", "v")
    peak_parameter = "k"

    def __attrs_post_init__(self) -> None:
        if not self.w0 > 0.0:
            raise DomainError(f"w0 must be positive, got {self.w0}")

    def field(self) -> HamiltonianField:
        return models.ssh_field()

    def critical(self, values: Mapping[str, float] | None = None) -> dict[str, float]:
        # the gap closes at k = ±π; a walk with sin k < 0 heads for -π
        k = math.pi if values is None else math.copysign(math.pi, values["k"])
        return {"k": k, "v": self.w0}

    def full_point(self, values: Mapping[str, float]) -> dict[str, float]:
        return {"v": values["v"], "w": self.w0, "k": values["k"]}

    def peak_qmts(self, values: Mapping[str, float], T: float) -> dict[str, float]:
        g_v, _, g_k = models.ssh_peak_qmt(values["k"], values["v"], self.w0, T)
        return {"k": g_k, "v": g_v}

    def references(self, T: float) -> dict[str, float]:
        return {"k": (T * self.w0) ** 2, "v": T * T}

    def probe(self) -> Vec3:
        # the limiting e_k is (0, 1, 0), so the probe has no y component
        return _normalized([self.d_x, 0.0, self.d_z])

    def side(self, name: str, values: Mapping[str, float]) -> int:
        match name:
            case "k":
                sin_k = math.sin(values["k"])
                if abs(sin_k) < SIDE_TOLERANCE:
                    return 0
                return 1 if sin_k > 0.0 else -1
            case _:
                v = values["v"]
                if v < 0.0:
                    return 1
                try:
                    winding = winding_number(v, self.w0).value
                except TransitionPointError:
                    return 0
                return 1 if winding == 1 else -1


def recover_initials(
    critical: Mapping[str, float], steps: Mapping[str, Sequence[float]]
) -> dict[str, float]:
    return {name: value - math.fsum(steps.get(name, ())) for name, value in critical.items()}


@define
class _Walker:
    tpt: TptModel
    initial: dict[str, float]
    T: float
    noise_sigma: float
    rng: np.random.Generator
    applied: dict[str, list[float]] = attrs.field(factory=dict)

    def __attrs_post_init__(self) -> None:
        self.applied = {name: [] for name in self.tpt.names}

    def current(self) -> dict[str, float]:
        return {
            name: self.initial[name] + math.fsum(self.applied[name]) for name in self.tpt.names
        }

    def measure(self) -> dict[str, float]:
        exact = self.tpt.peak_qmts(self.current(), self.T)
        if self.noise_sigma == 0.0:
            return exact
        return {
            name: value + float(self.rng.normal(0.0, self.noise_sigma))
            for name, value in exact.items()
        }

    def apply(self, name: str, delta: float) -> None:
        self.applied[name].append(delta)

    def record(self, iteration: int, name: str | None, delta: float) -> AdaptiveStep:
        values = self.current()
        field = self.tpt.field()
        point = self.tpt.full_point(values)
        peak = self.tpt.peak_parameter
        factor = gauge_factor(field, point, peak, self.T)
        steps = [(n, d) for n in self.tpt.names for d in self.applied[n]]
        residual = residual_hamiltonian(field, self.tpt.full_point(self.initial), steps)
        estimates = recover_initials(self.tpt.critical(self.current()), self.applied)
        return AdaptiveStep(
            iteration=iteration,
            parameter=name,
            step=delta,
            values=values,
            cumulative={n: math.fsum(self.applied[n]) for n in self.tpt.names},
            qmt=self.measure()[peak],
            probe_qmt=qmt(factor, factor, self.tpt.probe()),
            residual_norm=float(np.linalg.norm(residual)),
            estimates=estimates,
            deviations={n: abs(estimates[n] - self.initial[n]) for n in self.tpt.names},
        )

    def finish(self, records: list[AdaptiveStep], converged: bool) -> AdaptiveTrace:
        estimates = recover_initials(self.tpt.critical(self.current()), self.applied)
        return AdaptiveTrace(
            model=self.tpt.label,
            peak_parameter=self.tpt.peak_parameter,
            records=records,
            estimates=estimates,
            deviations={n: abs(estimates[n] - self.initial[n]) for n in self.tpt.names},
            converged=converged,
        )


def _walker(
    tpt: TptModel,
    initial: Mapping[str, float],
    T: float,
    noise_sigma: float,
    seed: int | None,
) -> _Walker:
    if not math.isfinite(T) or T <= 0.0:
        raise DomainError(f"evolution time must be positive and finite, got {T}")
    if not noise_sigma >= 0.0:
        raise DomainError(f"noise σ must be non-negative, got {noise_sigma}")
    missing = set(tpt.names) - set(initial)
    if missing:
        raise DomainError(f"initial values missing for {sorted(missing)}")
    return _Walker(
        tpt=tpt,
        initial={name: float(initial[name]) for name in tpt.names},
        T=T,
        noise_sigma=noise_sigma,
        rng=np.random.default_rng(seed),
    )


def run_schedule(
    tpt: TptModel,
    initial: Mapping[str, float],
    schedule: StepSchedule,
    T: float,
    criterion: PeakCriterion = PeakCriterion(),
    noise_sigma: float = 0.0,
    seed: int | None = None,
) -> AdaptiveTrace:
    """
    Replays a prescribed schedule from the hidden initial values, recording the QMT of the
    peak parameter after every shift. An empty schedule yields one record at the start, and
    the run counts as converged when the peak parameter alone ends within η of its peak.
    """

    walker = _walker(tpt, initial, T, noise_sigma, seed)
    ordered = schedule.ordered(tpt.names)
    records = [walker.record(0, None, 0.0)] if not ordered else []
    for iteration, (name, delta) in enumerate(ordered, start=1):
        walker.apply(name, delta)
        records.append(walker.record(iteration, name, delta))

    peak = tpt.peak_parameter
    converged = criterion.met(walker.measure(), {peak: tpt.references(T)[peak]})
    return walker.finish(records, converged)


def run_schedule_canonical(
    theta0: float,
    phi0: float,
    r0: float,
    schedule: StepSchedule,
    T: float,
    H0: float = 1.0,
    noise_sigma: float = 0.0,
    seed: int | None = None,
) -> AdaptiveTrace:
    return run_schedule(
        CanonicalTpt(phi0=phi0, H0=H0),
        {"theta": theta0, "r": r0},
        schedule,
        T,
        noise_sigma=noise_sigma,
        seed=seed,
    )


def run_schedule_ssh(
    k0: float,
    v0: float,
    w0: float,
    schedule: StepSchedule,
    T: float,
    noise_sigma: float = 0.0,
    seed: int | None = None,
) -> AdaptiveTrace:
    return run_schedule(
        SshTpt(w0=w0),
        {"k": k0, "v": v0},
        schedule,
        T,
        noise_sigma=noise_sigma,
        seed=seed,
    )


def auto_search(
    tpt: TptModel,
    initial: Mapping[str, float],
    T: float,
    policy: StepPolicy = StepPolicy(),
    criterion: PeakCriterion = PeakCriterion(),
    max_iters: int = DEFAULT_MAX_ITERS,
    noise_sigma: float = 0.0,
    seed: int | None = None,
) -> AdaptiveTrace:
    """
    Searches for the transition without knowing the initial values.

    This is not a hill climb on the measured QMT. Each parameter moves in the direction
    given by its side indicator (sgn sin for the angles, the Chern or winding number for the
    amplitudes), and the QMT only decides when to stop. The canonical g_θθ has an interior
    maximum in r (near r = 0.2 at θ = π/4), so following its gradient would stall there.

    Parameters:
        tpt:
            The model adapter that evaluates QMTs and side indicators at the hidden point.
        initial:
            Hidden true initial values; only used to simulate measurements.
        policy:
            Step sizes. An overshoot is a change of the side indicator of a parameter; the
            shrinking policy halves that parameter's step and turns back, the fixed policy
            freezes the parameter.
        criterion:
            Stops the search once every transition-related QMT is within η of its peak.
        max_iters:
            Upper bound on the number of shifts. The trace is returned either way, with
            `converged` set accordingly.
    """

    if max_iters < 1:
        raise DomainError(f"max_iters must be at least 1, got {max_iters}")

    walker = _walker(tpt, initial, T, noise_sigma, seed)
    references = tpt.references(T)
    step = {name: policy.initial_step for name in tpt.names}
    last_side: dict[str, int] = {}
    active = list(tpt.names)
    records: list[AdaptiveStep] = []

    iteration = 0
    turn = 0
    while iteration < max_iters:
        if criterion.met(walker.measure(), references):
            return walker.finish(records, True)
        if not active:
            break

        name = active[turn % len(active)]
        side = tpt.side(name, walker.current())
        previous = last_side.get(name)
        if side != 0 and previous is not None and side != previous:
            if policy.kind == "fixed":
                logger.info("%s overshot the transition; holding it at the fixed step", name)
                active.remove(name)
                continue
            step[name] *= 0.5
            logger.debug("%s overshot the transition; step halved to %.3g", name, step[name])
        if side == 0 or step[name] < policy.min_step:
            active.remove(name)
            continue

        last_side[name] = side
        delta = side * step[name]
        walker.apply(name, delta)
        iteration += 1
        turn += 1
        records.append(walker.record(iteration, name, delta))

    converged = criterion.met(walker.measure(), references)
    if not converged:
        logger.warning(
            "adaptive search stopped after %d shifts without reaching the QMT peak (σ=%g)",
            iteration,
            noise_sigma,
        )
    return walker.finish(records, converged)
