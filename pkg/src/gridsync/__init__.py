"""Second-order conformist-contrarian Kuramoto models of power-grid generators."""

from .model import (
    GridModel,
    PhaseState,
    PhysicalGeneratorSpec,
    check_critical_coupling,
    derive_coupling,
    derive_damping,
    derive_natural_frequencies,
    rhs,
    sign_matrix,
    stationary_frame_angles,
    wrap_angle,
)
from .integrator import IntegrationError, RunConfig, Trajectory, detect_steady_state, integrate
from .scenario import ScenarioSpec, builtin, load, save

__all__ = [
    "GridModel",
    "PhaseState",
    "PhysicalGeneratorSpec",
    "check_critical_coupling",
    "derive_coupling",
    "derive_damping",
    "derive_natural_frequencies",
    "rhs",
    "sign_matrix",
    "stationary_frame_angles",
    "wrap_angle",
    "IntegrationError",
    "RunConfig",
    "Trajectory",
    "detect_steady_state",
    "integrate",
    "ScenarioSpec",
    "builtin",
    "load",
    "save",
]

__version__ = "0.1.0"
