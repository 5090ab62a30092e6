"""Solver and certified boundary-feedback controller for 2x2 balance laws."""

from .core import (
    BoundarySpec,
    ControlConfig,
    Grid,
    RiemannState,
    RunConfig,
    SystemSpec,
    build_grid,
    density_flux,
)
from .control import ControlDecision, decide, kappa_star, mu_hat_matrix, mu_hat_rayleigh
from .cweno import Reconstruction, cweno3_interior, cwenob_boundary, reconstruct_all
from .lyapunov import (
    LyapunovParams,
    WeightTable,
    boundary_form_H,
    build_weight_table,
    l2_norm_sq,
    lyapunov_value,
    matrix_M,
    rayleigh_quotient,
    scaled_lyapunov,
)
from .scenarios import Scenario, initial_averages, kac_steady_state, make_scenario, prop1_threshold
from .solver import BlowUpError, SemiDiscreteRhs, cfl_dt, rhs, ssprk3_step, upwind_flux
from .cli import parse_config, run_simulation

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "BoundarySpec",
    "ControlConfig",
    "ControlDecision",
    "Grid",
    "LyapunovParams",
    "Reconstruction",
    "RiemannState",
    "RunConfig",
    "Scenario",
    "SemiDiscreteRhs",
    "SystemSpec",
    "WeightTable",
    "boundary_form_H",
    "build_grid",
    "build_weight_table",
    "cfl_dt",
    "cweno3_interior",
    "cwenob_boundary",
    "decide",
    "density_flux",
    "initial_averages",
    "kac_steady_state",
    "kappa_star",
    "l2_norm_sq",
    "lyapunov_value",
    "make_scenario",
    "matrix_M",
    "mu_hat_matrix",
    "mu_hat_rayleigh",
    "parse_config",
    "prop1_threshold",
    "rayleigh_quotient",
    "reconstruct_all",
    "rhs",
    "run_simulation",
    "scaled_lyapunov",
    "ssprk3_step",
    "upwind_flux",
    "__version__",
]
