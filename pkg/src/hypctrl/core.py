"""Shared value types for the solver, the Lyapunov machinery and the controller.

State convention: only deviations from the steady state are stored.  A state
holds cell averages of the two Riemann invariant deviations (r_plus, r_minus)
of a 2x2 semilinear balance law

    d_t r + Lam(x) d_x r + G(r; x) = 0,      x in (0, L),

with Lam = diag(lam_plus, lam_minus), lam_plus > 0 > lam_minus, closed by the
feedback boundary coupling

    (r_plus(t, 0), r_minus(t, L)) = kappa * (r_minus(t, 0), r_plus(t, L)).

All numerical kernels broadcast over trailing axes: a point value `r` has
shape (..., 2) and a coordinate `x` has shape (...,).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

CONTROLLER_MATRIX_EIG = "matrixeig"
CONTROLLER_RAYLEIGH = "rayleigh"
CONTROLLER_FIXED_MU = "fixedmu"
CONTROLLERS = (CONTROLLER_MATRIX_EIG, CONTROLLER_RAYLEIGH, CONTROLLER_FIXED_MU)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on [0, L] with n cells."""

    L: float
    n: int
    dx: float
    centers: np.ndarray
    edges: np.ndarray


def build_grid(L: float, n: int) -> Grid:
    """Build a uniform grid with exact endpoint edges.

    Requires L > 0 and n >= 4 (the reconstruction needs two interior cells).
    """
    if not np.isfinite(L) or L <= 0.0:
        raise ValueError(f"domain length must be positive, got {L}")
    if int(n) != n or n < 4:
        raise ValueError(f"need at least 4 cells, got {n}")
    n = int(n)
    edges = np.linspace(0.0, float(L), n + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return Grid(L=float(L), n=n, dx=float(L) / n, centers=centers, edges=edges)


@dataclass(frozen=True)
class RiemannState:
    """Cell averages of the deviation components, shape (n, 2), at time t."""

    avg: np.ndarray
    t: float = 0.0

    def component(self, k: int) -> np.ndarray:
        return self.avg[:, k]


@dataclass(frozen=True)
class SystemSpec:
    """Coefficients of one balance law instance.

    lambda_plus/lambda_minus map x -> speed and must broadcast over arrays.
    dlambda_dx returns both derivatives stacked on the last axis, shape
    (..., 2).  source(r, x) evaluates G(r; x) (the term moved to the left of
    the balance law); source_matrix(r, x) returns G_bar with
    G(r; x) = G_bar(r; x) @ r, shape (..., 2, 2).
    """

    lambda_plus: Callable[[np.ndarray], np.ndarray]
    lambda_minus: Callable[[np.ndarray], np.ndarray]
    dlambda_dx: Callable[[np.ndarray], np.ndarray]
    source: Callable[[np.ndarray, np.ndarray], np.ndarray]
    source_matrix: Callable[[np.ndarray, np.ndarray], np.ndarray]
    linear_source: bool = False
    lipschitz_c: float | None = None


@dataclass
class BoundarySpec:
    """Current feedback gain and its configured cap; kappa is updated online."""

    kappa: float
    kappa_max: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.kappa_max <= 1.0:
            raise ValueError(f"kappa_max must lie in (0, 1], got {self.kappa_max}")
        if not 0.0 <= self.kappa <= self.kappa_max:
            raise ValueError(f"kappa must lie in [0, {self.kappa_max}], got {self.kappa}")


@dataclass(frozen=True)
class ControlConfig:
    """Gain synthesis settings: target decay rate and selection rule."""

    target_rate: float = 1.0
    controller: str = CONTROLLER_MATRIX_EIG
    fixed_mu: float | None = None
    mu_scan_max: float = 64.0
    mu_scan_step: float = 1e-2
    bisect_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}, expected one of {CONTROLLERS}")
        if self.controller == CONTROLLER_FIXED_MU:
            if self.fixed_mu is None or self.fixed_mu < 0.0:
                raise ValueError("fixedmu controller needs fixed_mu >= 0")
        if self.target_rate <= 0.0:
            raise ValueError(f"target_rate must be positive, got {self.target_rate}")
        if not 0.0 < self.bisect_tol < self.mu_scan_step:
            raise ValueError("need 0 < bisect_tol < mu_scan_step")
        if self.mu_scan_max <= self.mu_scan_step:
            raise ValueError("need mu_scan_max > mu_scan_step")


@dataclass(frozen=True)
class RunConfig:
    """Full description of a closed-loop simulation run."""

    scenario: str = "linear"
    initial: str = "sincos"
    L: float = 1.0
    n: int = 32
    cfl: float = 0.45
    t_final: float = 10.0
    output_every: int = 1
    control: ControlConfig = field(default_factory=ControlConfig)
    kappa_max: float = 1.0
    snapshot_times: tuple[float, ...] = (0.0, 2.0, 5.0, 10.0)
    out_dir: str | None = None


def density_flux(r: np.ndarray, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Macroscopic deviation variables: density r+ + r- and flux gamma*(r+ - r-)."""
    r = np.asarray(r, dtype=float)
    rho = r[..., 0] + r[..., 1]
    q = gamma * (r[..., 0] - r[..., 1])
    return rho, q
