"""Coupled quasi-linear Stokes / linear elastodynamics interface solver.

Finite element realization of a partitioned Dirichlet-Neumann coupling
between an incompressible quasi-linear Stokes flow and a Lame solid sharing
a one-dimensional interface, together with the fixed-point driver, fractional
trace norms and an estimate-verification harness.
"""

from .config import RunConfig, default_config, parse_config, serialize_config
from .coupling import (CoupledProblem, CoupledSolution, CouplingConfig,
                       coupling_residuals, epsilon_limit_study,
                       fixed_point_solve, operator_teps)
from .fem import Discretization, discretize
from .fluid import FluidModel, accumulate_displacement, operator_t2eps
from .geometry import CoupledMesh, TimeGrid, build_geometry
from .laws import (DiffusionLaw, FluidParams, SolidParams, certify_constants,
                   linear_law, make_law, saturating_law, time_modulated_law)
from .norms import (InterfaceGram, NormReport, build_gram, dual_half_norm,
                    fractional_norm, x_norm, x_norm_value)
from .solid import SolidModel, operator_t1
from .traces import DISPLACEMENT, TRACTION, TraceSeries, zero_trace
from .verify import EstimateReport, VerifySetting, run_full_report

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "default_config", "parse_config", "serialize_config",
    "CoupledProblem", "CoupledSolution", "CouplingConfig",
    "coupling_residuals", "epsilon_limit_study", "fixed_point_solve",
    "operator_teps", "Discretization", "discretize", "FluidModel",
    "accumulate_displacement", "operator_t2eps", "CoupledMesh", "TimeGrid",
    "build_geometry", "DiffusionLaw", "FluidParams", "SolidParams",
    "certify_constants", "linear_law", "make_law", "saturating_law",
    "time_modulated_law", "InterfaceGram", "NormReport", "build_gram",
    "dual_half_norm", "fractional_norm", "x_norm", "x_norm_value",
    "SolidModel", "operator_t1", "DISPLACEMENT", "TRACTION", "TraceSeries",
    "zero_trace", "EstimateReport", "VerifySetting", "run_full_report",
    "__version__",
]
