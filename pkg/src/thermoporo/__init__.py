"""Finite element solver for four-field linear thermo-poroelasticity.

The package discretizes the coupled displacement / volumetric-stress /
pressure / temperature system with Taylor-Hood-type triangular elements and
advances it in time with a monolithic backward-Euler scheme or one of three
semi-decoupled variants (sequential elasticity-first, sequential
diffusion-first, and a parallel scheme with a lagged volumetric-stress
difference).
"""

from .analysis import (
    ErrorReport,
    benchmark,
    convergence_study,
    error_report,
    observed_rate,
    state_difference_norms,
)
from .mesh import BoundaryTag, TriMesh, build_uniform_rect, refine_regular
from .model import (
    SPD2,
    AssumptionError,
    ModelParams,
    SourceSet,
    derive_lame,
    example1_exact,
    example1_params,
    example2_scenario,
    manufacture_sources,
    rd_coefficient_matrix,
)
from .steppers import State, Stepper

__all__ = [
    "BoundaryTag",
    "TriMesh",
    "build_uniform_rect",
    "refine_regular",
    "SPD2",
    "AssumptionError",
    "ModelParams",
    "SourceSet",
    "derive_lame",
    "example1_exact",
    "example1_params",
    "example2_scenario",
    "manufacture_sources",
    "rd_coefficient_matrix",
    "State",
    "Stepper",
    "ErrorReport",
    "benchmark",
    "convergence_study",
    "error_report",
    "observed_rate",
    "state_difference_norms",
]
