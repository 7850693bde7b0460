"""Finite-element simulator for pulsatile non-Newtonian flow in a
compliant stenosed channel, with flow-stagnation zone detection and
rupture-risk analysis."""

__version__ = "0.1.0"

from ._kernels import active_backend
from .analysis import (AverageTracker, ProbeSeries, SolidificationRegion,
                       detect_recirculation, detect_regions,
                       fluid_stress_tensor, max_shear_field, speed_field,
                       update_time_averages)
from .config import ConfigError, RunConfig, load_config
from .coupling import (CouplingConfig, CouplingState, StepDiagnostics,
                       coupling_step, initial_coupling_state)
from .fluid import FluidParams, FluidState, boundary_flux, fluid_step, inlet_profile
from .geometry import (BoundaryLabel, Mesh, StenosisGeometry, Subdomain,
                       build_stenosed_artery, extract_submesh, rectangle_mesh)
from .materials import (CarreauParams, HyperelasticParams, LameParams,
                        carreau_viscosity, max_shear, shear_rate)
from .pipeline import RunResult, run, run_pipeline
from .rupture import (ClotProblem, ClotSolution, ZoneDiagnostics,
                      build_lifting, clot_solve, zone_diagnostics)
from .structure import (InterfaceTraction, NewtonParams, SolidState,
                        newton_solve, reference_state)

__all__ = [
    "__version__", "active_backend",
    # geometry
    "BoundaryLabel", "Mesh", "StenosisGeometry", "Subdomain",
    "build_stenosed_artery", "extract_submesh", "rectangle_mesh",
    # materials
    "CarreauParams", "HyperelasticParams", "LameParams",
    "carreau_viscosity", "max_shear", "shear_rate",
    # fluid
    "FluidParams", "FluidState", "boundary_flux", "fluid_step",
    "inlet_profile",
    # structure
    "InterfaceTraction", "NewtonParams", "SolidState", "newton_solve",
    "reference_state",
    # coupling
    "CouplingConfig", "CouplingState", "StepDiagnostics", "coupling_step",
    "initial_coupling_state",
    # analysis
    "AverageTracker", "ProbeSeries", "SolidificationRegion",
    "detect_recirculation", "detect_regions", "fluid_stress_tensor",
    "max_shear_field", "speed_field", "update_time_averages",
    # rupture
    "ClotProblem", "ClotSolution", "ZoneDiagnostics", "build_lifting",
    "clot_solve", "zone_diagnostics",
    # configuration and orchestration
    "ConfigError", "RunConfig", "load_config", "RunResult", "run",
    "run_pipeline",
]
