"""Weighted-energy certificates: decay weights, certificate matrix, boundary form.

The candidate Lyapunov functional is the weighted energy

    V = integral of W_plus * r_plus^2 + W_minus * r_minus^2

with transport-adapted weights

    W_plus(x)  = exp(-mu_tilde * int_0^x ds/lam_plus)  / lam_plus(x)
    W_minus(x) = exp(-mu_tilde * int_x^L ds/|lam_minus|) / |lam_minus(x)|.

Along solutions, dV/dt = -integral of r^T Mt r + H, where
Mt = mu_tilde * W + W Gbar + Gbar^T W and H collects the boundary terms, so
exponential decay with rate mu_tilde is certified once the similarity-scaled
matrix M = W^(-1/2) Mt W^(-1/2) stays positive and H stays nonpositive.

All integrals over cells use the same three-node quadrature (1, 4, 1)/6 that
the reconstruction nodes support exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, SystemSpec
from .cweno import Reconstruction


@dataclass(frozen=True)
class WeightTable:
    """Per-grid cache of speeds and cumulative speed integrals.

    Nodes interleave edges and centers: node 2j is edge j, node 2j+1 is
    center j.  int_plus[k] = int_0^{x_k} ds/lam_plus and
    int_minus[k] = int_{x_k}^L ds/|lam_minus|, accumulated with per-panel
    Simpson so constant speeds are integrated exactly.
    """

    grid: Grid
    system: SystemSpec
    nodes: np.ndarray
    lam_plus: np.ndarray
    lam_minus_abs: np.ndarray
    int_plus: np.ndarray
    int_minus: np.ndarray


def build_weight_table(grid: Grid, system: SystemSpec) -> WeightTable:
    nodes = np.empty(2 * grid.n + 1)
    nodes[0::2] = grid.edges
    nodes[1::2] = grid.centers
    quarter = 0.5 * (nodes[:-1] + nodes[1:])

    lam_p = np.broadcast_to(np.asarray(system.lambda_plus(nodes), dtype=float), nodes.shape).copy()
    lam_m = np.abs(np.broadcast_to(np.asarray(system.lambda_minus(nodes), dtype=float), nodes.shape)).copy()
    if np.any(lam_p <= 0.0) or np.any(lam_m <= 0.0):
        raise ValueError("characteristic speeds must be nonzero with fixed signs")

    qp_p = 1.0 / np.asarray(system.lambda_plus(quarter), dtype=float)
    qp_m = 1.0 / np.abs(np.asarray(system.lambda_minus(quarter), dtype=float))
    h = np.diff(nodes)
    panels_p = h / 6.0 * (1.0 / lam_p[:-1] + 4.0 * qp_p + 1.0 / lam_p[1:])
    panels_m = h / 6.0 * (1.0 / lam_m[:-1] + 4.0 * qp_m + 1.0 / lam_m[1:])

    int_plus = np.concatenate(([0.0], np.cumsum(panels_p)))
    int_minus = np.concatenate(([0.0], np.cumsum(panels_m[::-1])))[::-1].copy()
    return WeightTable(
        grid=grid,
        system=system,
        nodes=nodes,
        lam_plus=lam_p,
        lam_minus_abs=lam_m,
        int_plus=int_plus,
        int_minus=int_minus,
    )


@dataclass(frozen=True)
class LyapunovParams:
    """A decay-rate candidate mu_tilde bound to a weight table."""

    mu_tilde: float
    table: WeightTable

    def __post_init__(self) -> None:
        if not np.isfinite(self.mu_tilde) or self.mu_tilde < 0.0:
            raise ValueError(f"mu_tilde must be finite and nonnegative, got {self.mu_tilde}")


def node_weights(params: LyapunovParams) -> tuple[np.ndarray, np.ndarray]:
    """Both weights at every table node, shape (2n + 1,)."""
    t = params.table
    w_plus = np.exp(-params.mu_tilde * t.int_plus) / t.lam_plus
    w_minus = np.exp(-params.mu_tilde * t.int_minus) / t.lam_minus_abs
    return w_plus, w_minus


def weights(x: np.ndarray, params: LyapunovParams) -> tuple[np.ndarray, np.ndarray]:
    """Both weights at arbitrary positions, integrating the speeds directly."""
    t = params.table
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > t.grid.L):
        raise ValueError("position outside the domain")
    ip = _integrate(lambda s: 1.0 / t.system.lambda_plus(s), np.zeros_like(x), x)
    im = _integrate(lambda s: 1.0 / np.abs(t.system.lambda_minus(s)), x, np.full_like(x, t.grid.L))
    w_plus = np.exp(-params.mu_tilde * ip) / t.system.lambda_plus(x)
    w_minus = np.exp(-params.mu_tilde * im) / np.abs(t.system.lambda_minus(x))
    return w_plus, w_minus


def _integrate(fun, a: np.ndarray, b: np.ndarray, panels: int = 128) -> np.ndarray:
    """Composite Simpson of fun over [a, b], vectorized over the endpoints."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    h = (b - a) / panels
    offsets = np.arange(panels)
    left = a[..., None] + h[..., None] * offsets
    mid = left + 0.5 * h[..., None]
    right = left + h[..., None]
    panel = h[..., None] / 6.0 * (fun(left) + 4.0 * fun(mid) + fun(right))
    return panel.sum(axis=-1)


def _cell_nodes(n: int) -> np.ndarray:
    """Table-node indices (left edge, center, right edge) per cell, shape (n, 3)."""
    return 2 * np.arange(n)[:, None] + np.arange(3)[None, :]


def _node_values(recon: Reconstruction) -> np.ndarray:
    """Reconstruction node values per cell, shape (n, 3, 2)."""
    return np.stack((recon.left, recon.center, recon.right), axis=1)


def _simpson_cells(point_values: np.ndarray, dx: float) -> float:
    """Sum of per-cell Simpson quadratures; point_values has shape (n, 3)."""
    return float(dx / 6.0 * np.sum(point_values[:, 0] + 4.0 * point_values[:, 1] + point_values[:, 2]))


def l2_norm_sq(recon: Reconstruction, grid: Grid) -> float:
    """Quadrature of |r|^2 over the domain from the reconstruction nodes."""
    r = _node_values(recon)
    return _simpson_cells(r[..., 0] ** 2 + r[..., 1] ** 2, grid.dx)


def lyapunov_value(recon: Reconstruction, params: LyapunovParams) -> float:
    """Weighted energy V at the reconstruction nodes."""
    t = params.table
    idx = _cell_nodes(t.grid.n)
    w_plus, w_minus = node_weights(params)
    r = _node_values(recon)
    integrand = w_plus[idx] * r[..., 0] ** 2 + w_minus[idx] * r[..., 1] ** 2
    return _simpson_cells(integrand, t.grid.dx)


def scaled_lyapunov(value: float, params: LyapunovParams) -> float:
    """V divided by the smallest node weight; dominates the plain L2 energy."""
    w_plus, w_minus = node_weights(params)
    w_min = min(float(np.min(w_plus)), float(np.min(w_minus)))
    return value / w_min


def matrix_M(r: np.ndarray, x: float, params: LyapunovParams) -> np.ndarray:
    """Scaled certificate matrix M = W^(-1/2) Mt W^(-1/2) at one point."""
    w_plus, w_minus = weights(x, params)
    g = params.table.system.source_matrix(np.asarray(r, dtype=float), np.asarray(x, dtype=float))
    ratio = np.sqrt(w_plus / w_minus)
    off = g[..., 0, 1] * ratio + g[..., 1, 0] / ratio
    return np.array(
        [
            [params.mu_tilde + 2.0 * g[..., 0, 0], off],
            [off, params.mu_tilde + 2.0 * g[..., 1, 1]],
        ]
    )


def min_eig_2x2(m: np.ndarray) -> float:
    """Smaller eigenvalue of a symmetric 2x2 matrix, closed form."""
    m = np.asarray(m, dtype=float)
    scale = 1.0 + float(np.max(np.abs(m)))
    if abs(m[0, 1] - m[1, 0]) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (m[0, 0] + m[1, 1]) - 0.5 * np.hypot(m[0, 0] - m[1, 1], 2.0 * m[0, 1])


def max_eig_2x2(m: np.ndarray) -> float:
    """Larger eigenvalue of a symmetric 2x2 matrix, closed form."""
    m = np.asarray(m, dtype=float)
    scale = 1.0 + float(np.max(np.abs(m)))
    if abs(m[0, 1] - m[1, 0]) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (m[0, 0] + m[1, 1]) + 0.5 * np.hypot(m[0, 0] - m[1, 1], 2.0 * m[0, 1])


def boundary_form_H(
    trace_plus_L: float, trace_minus_0: float, kappa: float, params: LyapunovParams
) -> float:
    """Boundary contribution to dV/dt for outgoing traces and a gain kappa.

    Nonpositive H means the coupling returns no more weighted energy than the
    outgoing waves carry away.
    """
    t = params.table
    decay_plus = np.exp(-params.mu_tilde * t.int_plus[-1])
    decay_minus = np.exp(-params.mu_tilde * t.int_minus[0])
    returned = kappa * kappa * (trace_minus_0**2 + trace_plus_L**2)
    outgoing = decay_plus * trace_plus_L**2 + decay_minus * trace_minus_0**2
    return float(returned - outgoing)


def rayleigh_quotient(recon: Reconstruction, params: LyapunovParams) -> float:
    """Global ratio (integral of r^T Mt r) / (integral of r^T W r).

    Bounded between the extreme node eigenvalues of M, so it certifies the
    instantaneous decay rate of V for the current profile.
    """
    t = params.table
    idx = _cell_nodes(t.grid.n)
    w_plus, w_minus = node_weights(params)
    wp, wm = w_plus[idx], w_minus[idx]
    r = _node_values(recon)
    x = t.nodes[idx]

    g = t.system.source_matrix(r, x)
    gr = np.einsum("...ij,...j->...i", g, r)
    energy = wp * r[..., 0] ** 2 + wm * r[..., 1] ** 2
    dissipation = params.mu_tilde * energy + 2.0 * (wp * r[..., 0] * gr[..., 0] + wm * r[..., 1] * gr[..., 1])

    denominator = _simpson_cells(energy, t.grid.dx)
    if denominator < 1e-300:
        raise ValueError("zero-energy state has no Rayleigh quotient")
    return _simpson_cells(dissipation, t.grid.dx) / denominator
