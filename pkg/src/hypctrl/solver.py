"""Semi-discrete finite-volume operator and SSP-RK3 time stepping.

The spatial operator is upwind in the reconstructed edge traces, with the
inflow traces closed through the feedback coupling, and integrates the source
with the same three-node quadrature the reconstruction is built on:

    d/dt rbar_j = -(F_{j+1/2} - F_{j-1/2}) / dx - (1/6) * (g_l + 4 g_c + g_r)

where g = G(r; x) - dLam/dx * r absorbs the non-conservative part of a
space-dependent speed field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BoundarySpec, Grid, RiemannState, SystemSpec
from .cweno import Reconstruction, reconstruct_all


class BlowUpError(RuntimeError):
    """Raised when the state or tendency stops being finite."""

    def __init__(self, message: str, records: list | None = None, last_good_index: int | None = None):
        super().__init__(message)
        self.records = records
        self.last_good_index = last_good_index


def upwind_flux(
    left_value: np.ndarray,
    right_value: np.ndarray,
    lam_plus: np.ndarray,
    lam_minus: np.ndarray,
) -> np.ndarray:
    """Upwind interface flux: the plus wave uses the left trace, the minus wave the right.

    left_value/right_value have shape (..., 2); speeds broadcast over the
    leading axes.  Speeds with the wrong sign are rejected.
    """
    lam_plus = np.asarray(lam_plus, dtype=float)
    lam_minus = np.asarray(lam_minus, dtype=float)
    if np.any(lam_plus <= 0.0):
        raise ValueError("lam_plus must be strictly positive")
    if np.any(lam_minus >= 0.0):
        raise ValueError("lam_minus must be strictly negative")
    left_value = np.asarray(left_value, dtype=float)
    right_value = np.asarray(right_value, dtype=float)
    return np.stack(
        (lam_plus * left_value[..., 0], lam_minus * right_value[..., 1]), axis=-1
    )


def source_quadrature(
    v_left: np.ndarray,
    v_center: np.ndarray,
    v_right: np.ndarray,
    x_center: np.ndarray,
    dx: float,
    system: SystemSpec,
) -> np.ndarray:
    """Cell average of G(r; x) - dLam/dx * r over each cell, weights (1, 4, 1)/6."""
    x_center = np.asarray(x_center, dtype=float)
    half = 0.5 * dx

    def tilde(r: np.ndarray, x: np.ndarray) -> np.ndarray:
        return system.source(r, x) - system.dlambda_dx(x) * r

    acc = tilde(v_left, x_center - half)
    acc = acc + 4.0 * tilde(v_center, x_center)
    acc = acc + tilde(v_right, x_center + half)
    return acc / 6.0


def rhs(state: RiemannState, grid: Grid, system: SystemSpec, kappa: float) -> np.ndarray:
    """Tendency of the cell averages for a frozen feedback gain kappa."""
    if not np.all(np.isfinite(state.avg)):
        raise BlowUpError("non-finite state handed to the spatial operator")
    recon = reconstruct_all(state, grid)

    # interface traces; inflow closed by the feedback coupling
    left_trace = np.empty((grid.n + 1, 2))
    right_trace = np.empty((grid.n + 1, 2))
    left_trace[1:] = recon.right
    right_trace[:-1] = recon.left
    left_trace[0, 0] = kappa * recon.left[0, 1]
    left_trace[0, 1] = recon.left[0, 1]
    right_trace[-1, 0] = recon.right[-1, 0]
    right_trace[-1, 1] = kappa * recon.right[-1, 0]

    lam_p = np.broadcast_to(np.asarray(system.lambda_plus(grid.edges), dtype=float), (grid.n + 1,))
    lam_m = np.broadcast_to(np.asarray(system.lambda_minus(grid.edges), dtype=float), (grid.n + 1,))
    flux = upwind_flux(left_trace, right_trace, lam_p, lam_m)

    src = source_quadrature(recon.left, recon.center, recon.right, grid.centers, grid.dx, system)
    tendency = -(flux[1:] - flux[:-1]) / grid.dx - src
    if not np.all(np.isfinite(tendency)):
        raise BlowUpError(f"non-finite tendency at t={state.t:.6g}")
    return tendency


@dataclass
class SemiDiscreteRhs:
    """Spatial operator bound to a grid, a system and a mutable gain slot."""

    grid: Grid
    system: SystemSpec
    boundary: BoundarySpec

    def __call__(self, state: RiemannState) -> np.ndarray:
        return rhs(state, self.grid, self.system, self.boundary.kappa)


def cfl_dt(grid: Grid, system: SystemSpec, cfl: float) -> float:
    """Time step cfl * dx / max edge speed."""
    if not 0.0 < cfl <= 1.0:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    lam_p = np.abs(np.asarray(system.lambda_plus(grid.edges), dtype=float))
    lam_m = np.abs(np.asarray(system.lambda_minus(grid.edges), dtype=float))
    fastest = max(float(np.max(lam_p)), float(np.max(lam_m)))
    if fastest <= 0.0:
        raise ValueError("maximum characteristic speed must be positive")
    return cfl * grid.dx / fastest


def ssprk3_step(u: np.ndarray, dt: float, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """One strong-stability-preserving RK3 step for du/dt = f(u)."""
    u = np.asarray(u, dtype=float)
    u1 = u + dt * f(u)
    u2 = 0.75 * u + 0.25 * (u1 + dt * f(u1))
    return u / 3.0 + (2.0 / 3.0) * (u2 + dt * f(u2))
