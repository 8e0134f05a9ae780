from .errors import (
    CoefficientSingularityError,
    DegenerateError,
    DomainError,
    InconsistencyError,
    QgError,
    StepTooLargeError,
    TransitionPointError,
    UndefinedCfimError,
)
from .geometry import (
    GaugeFactor,
    GeometryReport,
    HamiltonianField,
    berry,
    fom,
    gauge_factor,
    gauge_factor_from_vectors,
    gauge_magnitude,
    geometry_report,
    incompatibility_residual,
    optimal_probe,
    qgt,
    qmt,
)
from .oracle import FdSpec, qgt_fd, qgt_fd_states
from .su2 import QubitState, bloch, evolve, ground_state, state_from_bloch
from .topology import (
    ChernEstimate,
    WindingEstimate,
    chern_number,
    coarse_grain,
    coarse_grain_sin2,
    winding_number,
)

__all__ = [
    "ChernEstimate",
    "CoefficientSingularityError",
    "DegenerateError",
    "DomainError",
    "FdSpec",
    "GaugeFactor",
    "GeometryReport",
    "HamiltonianField",
    "InconsistencyError",
    "QgError",
    "QubitState",
    "StepTooLargeError",
    "TransitionPointError",
    "UndefinedCfimError",
    "WindingEstimate",
    "berry",
    "bloch",
    "chern_number",
    "coarse_grain",
    "coarse_grain_sin2",
    "evolve",
    "fom",
    "gauge_factor",
    "gauge_factor_from_vectors",
    "gauge_magnitude",
    "geometry_report",
    "ground_state",
    "incompatibility_residual",
    "optimal_probe",
    "qgt",
    "qgt_fd",
    "qgt_fd_states",
    "qmt",
    "state_from_bloch",
    "winding_number",
]
