"""Third-order central WENO reconstruction with one-sided boundary stencils.

Every cell gets a quadratic reconstruction polynomial evaluated at the cell's
left edge, center and right edge.  The three node values determine the
polynomial uniquely, and Simpson's rule on them returns the cell average
exactly, which is the conservation property the solver relies on.

Interior cells blend the optimal central quadratic with the two one-sided
linear substencils; boundary cells blend a fully one-sided quadratic with a
near and a far linear substencil, both anchored at the boundary cell average
so that every candidate conserves the boundary cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, RiemannState

# linear blending weights: central/one-sided quadratic, then the two linears
D_CENTRAL = 0.5
D_SIDE = 0.25


@dataclass(frozen=True)
class Reconstruction:
    """Per-cell node values of the reconstruction, each of shape (n, 2)."""

    left: np.ndarray
    center: np.ndarray
    right: np.ndarray

    @property
    def outgoing_trace_plus(self) -> float:
        """Reconstructed r_plus at the outflow edge x = L."""
        return float(self.right[-1, 0])

    @property
    def outgoing_trace_minus(self) -> float:
        """Reconstructed r_minus at the outflow edge x = 0."""
        return float(self.left[0, 1])


def _blend(
    d: tuple[float, float, float],
    betas: tuple[np.ndarray, np.ndarray, np.ndarray],
    tau: np.ndarray,
    eps: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Z-type nonlinear weights alpha_k = d_k * (1 + tau / (beta_k + eps))."""
    alphas = [dk * (1.0 + tau / (bk + eps)) for dk, bk in zip(d, betas)]
    total = alphas[0] + alphas[1] + alphas[2]
    return alphas[0] / total, alphas[1] / total, alphas[2] / total


def cweno3_interior(
    a_minus: np.ndarray, a_center: np.ndarray, a_plus: np.ndarray, dx: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reconstruct the middle cell of a symmetric 3-cell stencil.

    Arguments are cell averages (scalars or broadcastable arrays); returns
    node values (v_left, v_center, v_right) of the middle cell.
    """
    a_minus = np.asarray(a_minus, dtype=float)
    a_center = np.asarray(a_center, dtype=float)
    a_plus = np.asarray(a_plus, dtype=float)
    if dx <= 0.0:
        raise ValueError(f"dx must be positive, got {dx}")

    # polynomials in the scaled coordinate xi = (x - x_center) / dx
    curv = a_plus - 2.0 * a_center + a_minus
    slope_l = a_center - a_minus
    slope_r = a_plus - a_center

    # optimal quadratic: conserves all three cell averages
    q0 = a_center - curv / 24.0
    q1 = 0.5 * (a_plus - a_minus)
    q2 = 0.5 * curv
    # central candidate so that d-weighted blend of candidates equals the optimum
    p0 = 2.0 * q0 - a_center
    p1 = 2.0 * q1 - 0.5 * (slope_l + slope_r)
    p2 = 2.0 * q2

    beta_c = p1 * p1 + (13.0 / 3.0) * p2 * p2
    beta_l = slope_l * slope_l
    beta_r = slope_r * slope_r
    tau = np.abs(beta_l - beta_r)
    w_c, w_l, w_r = _blend((D_CENTRAL, D_SIDE, D_SIDE), (beta_c, beta_l, beta_r), tau, dx * dx)

    b0 = w_c * p0 + (w_l + w_r) * a_center
    b1 = w_c * p1 + w_l * slope_l + w_r * slope_r
    b2 = w_c * p2
    return b0 - 0.5 * b1 + 0.25 * b2, b0, b0 + 0.5 * b1 + 0.25 * b2


def _cwenob_left(
    a1: np.ndarray, a2: np.ndarray, a3: np.ndarray, dx: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided reconstruction of cell 1 from the three cells next to x = 0."""
    # xi = (x - x_1) / dx, so cells 1, 2, 3 sit at xi-centers 0, 1, 2
    curv = a3 - 2.0 * a2 + a1
    slope_near = a2 - a1
    slope_far = a3 - a2

    # one-sided optimal quadratic conserving all three averages
    q0 = a1 - curv / 24.0
    q1 = slope_near - 0.5 * curv
    q2 = 0.5 * curv
    # linear substencils anchored at the boundary cell average (conservation)
    p0 = 2.0 * q0 - a1
    p1 = 2.0 * q1 - 0.5 * (slope_near + slope_far)
    p2 = 2.0 * q2

    beta_q = p1 * p1 + (13.0 / 3.0) * p2 * p2
    beta_near = slope_near * slope_near
    beta_far = slope_far * slope_far
    # global indicator from the extreme candidates of the ordered set
    tau = np.abs(beta_q - beta_far)
    w_q, w_n, w_f = _blend(
        (D_CENTRAL, D_SIDE, D_SIDE), (beta_q, beta_near, beta_far), tau, dx * dx
    )

    b0 = w_q * p0 + (w_n + w_f) * a1
    b1 = w_q * p1 + w_n * slope_near + w_f * slope_far
    b2 = w_q * p2
    return b0 - 0.5 * b1 + 0.25 * b2, b0, b0 + 0.5 * b1 + 0.25 * b2


def cwenob_boundary(
    a1: np.ndarray, a2: np.ndarray, a3: np.ndarray, dx: float, side: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reconstruct a boundary cell from the three cells nearest the boundary.

    For side="left" the averages are ordered away from the boundary (cells
    1, 2, 3); for side="right" they are ordered toward it (cells n-2, n-1, n)
    and the stencil is handled by mirror symmetry.
    """
    if side == "left":
        return _cwenob_left(np.asarray(a1, dtype=float), np.asarray(a2, dtype=float),
                            np.asarray(a3, dtype=float), dx)
    if side == "right":
        v_l, v_c, v_r = _cwenob_left(np.asarray(a3, dtype=float), np.asarray(a2, dtype=float),
                                     np.asarray(a1, dtype=float), dx)
        return v_r, v_c, v_l
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def reconstruct_all(state: RiemannState, grid: Grid) -> Reconstruction:
    """Componentwise reconstruction of every cell of the grid."""
    avg = state.avg
    if avg.shape != (grid.n, 2):
        raise ValueError(f"state shape {avg.shape} does not match grid with n={grid.n}")

    left = np.empty_like(avg)
    center = np.empty_like(avg)
    right = np.empty_like(avg)

    v_l, v_c, v_r = cweno3_interior(avg[:-2], avg[1:-1], avg[2:], grid.dx)
    left[1:-1] = v_l
    center[1:-1] = v_c
    right[1:-1] = v_r

    left[0], center[0], right[0] = cwenob_boundary(avg[0], avg[1], avg[2], grid.dx, "left")
    left[-1], center[-1], right[-1] = cwenob_boundary(avg[-3], avg[-2], avg[-1], grid.dx, "right")
    return Reconstruction(left=left, center=center, right=right)
