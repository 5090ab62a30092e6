"""Online gain synthesis from the weighted-energy certificates.

Each step picks the smallest decay-rate candidate mu_hat whose certificate
clears the target rate, then maps it to the largest admissible feedback gain

    kappa_star = min(exp(-mu_hat * L / (2 * lam_min)), kappa_max),

which keeps the boundary form nonpositive.  Candidate selection walks a
coarse mu grid upward to the first feasible point and then bisects inside the
bracketing interval, which tolerates certificates that are not monotone in mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import ControlConfig, CONTROLLER_FIXED_MU, CONTROLLER_MATRIX_EIG, CONTROLLER_RAYLEIGH
from .cweno import Reconstruction
from .lyapunov import (
    LyapunovParams,
    WeightTable,
    _cell_nodes,
    _node_values,
    boundary_form_H,
)

_CHUNK = 512
_ZERO_ENERGY = 1e-30


@dataclass(frozen=True)
class ControlDecision:
    """Per-step controller output; infeasible steps carry the previous gain."""

    mu_hat: float
    kappa_star: float
    h_value: float
    feasible: bool


def _node_data(recon: Reconstruction, table: WeightTable):
    """Per-node state, source matrix and cumulative integrals, shapes (n, 3, ...)."""
    idx = _cell_nodes(table.grid.n)
    r = _node_values(recon)
    if not np.all(np.isfinite(r)):
        raise ValueError("reconstruction contains non-finite node values")
    x = table.nodes[idx]
    g = table.system.source_matrix(r, x)
    return (
        r,
        g,
        table.int_plus[idx],
        table.int_minus[idx],
        table.lam_plus[idx],
        table.lam_minus_abs[idx],
    )


def _smallest_feasible(predicate: Callable[[np.ndarray], np.ndarray], cfg: ControlConfig) -> float | None:
    """First feasible point of the coarse scan, refined by bisection."""
    step = cfg.mu_scan_step
    count = int(math.floor(cfg.mu_scan_max / step + 1e-9))
    first = None
    for start in range(0, count, _CHUNK):
        stop = min(start + _CHUNK, count)
        chunk = step * np.arange(start + 1, stop + 1)
        hits = np.nonzero(predicate(chunk))[0]
        if hits.size:
            first = float(chunk[hits[0]])
            break
    if first is None:
        return None

    lo = max(first - step, 0.0)
    if lo == 0.0 and bool(predicate(np.array([0.0]))[0]):
        return 0.0
    hi = first
    while hi - lo > cfg.bisect_tol:
        mid = 0.5 * (lo + hi)
        if bool(predicate(np.array([mid]))[0]):
            hi = mid
        else:
            lo = mid
    return hi


def mu_hat_matrix(
    recon: Reconstruction, table: WeightTable, target_rate: float, cfg: ControlConfig
) -> float | None:
    """Smallest mu with min-eigenvalue of M >= target at every node, or None."""
    r, g, ip, im, lam_p, lam_m = _node_data(recon, table)
    g00 = g[..., 0, 0, None]
    g11 = g[..., 1, 1, None]
    g01 = g[..., 0, 1, None]
    g10 = g[..., 1, 0, None]
    ip = ip[..., None]
    im = im[..., None]
    lam_p = lam_p[..., None]
    lam_m = lam_m[..., None]

    def predicate(mus: np.ndarray) -> np.ndarray:
        w_plus = np.exp(-mus * ip) / lam_p
        w_minus = np.exp(-mus * im) / lam_m
        ratio = np.sqrt(w_plus / w_minus)
        off = g01 * ratio + g10 / ratio
        diag_a = mus + 2.0 * g00
        diag_b = mus + 2.0 * g11
        min_eig = 0.5 * (diag_a + diag_b) - 0.5 * np.hypot(diag_a - diag_b, 2.0 * off)
        return np.all(min_eig >= target_rate, axis=(0, 1))

    return _smallest_feasible(predicate, cfg)


def mu_hat_rayleigh(
    recon: Reconstruction, table: WeightTable, target_rate: float, cfg: ControlConfig
) -> float | None:
    """Smallest mu with Rayleigh quotient >= target, or None; mu at zero energy."""
    r, g, ip, im, lam_p, lam_m = _node_data(recon, table)
    dx = table.grid.dx
    simpson = np.array([1.0, 4.0, 1.0]) * dx / 6.0

    plain = simpson[None, :] * (r[..., 0] ** 2 + r[..., 1] ** 2)
    if float(plain.sum()) < _ZERO_ENERGY:
        return target_rate

    gr = np.einsum("...ij,...j->...i", g, r)
    ep = simpson[None, :] * r[..., 0] ** 2
    em = simpson[None, :] * r[..., 1] ** 2
    cp = simpson[None, :] * 2.0 * r[..., 0] * gr[..., 0]
    cm = simpson[None, :] * 2.0 * r[..., 1] * gr[..., 1]

    def predicate(mus: np.ndarray) -> np.ndarray:
        w_plus = np.exp(-mus * ip[..., None]) / lam_p[..., None]
        w_minus = np.exp(-mus * im[..., None]) / lam_m[..., None]
        energy = (w_plus * ep[..., None] + w_minus * em[..., None]).sum(axis=(0, 1))
        dissipation = mus * energy + (w_plus * cp[..., None] + w_minus * cm[..., None]).sum(axis=(0, 1))
        return dissipation >= target_rate * energy

    return _smallest_feasible(predicate, cfg)


def kappa_star(mu_hat: float, table: WeightTable, kappa_max: float = 1.0) -> float:
    """Largest admissible gain for a certified rate mu_hat."""
    if not np.isfinite(mu_hat) or mu_hat < 0.0:
        raise ValueError(f"mu_hat must be finite and nonnegative, got {mu_hat}")
    if not 0.0 < kappa_max <= 1.0:
        raise ValueError(f"kappa_max must lie in (0, 1], got {kappa_max}")
    edges = slice(0, None, 2)
    lam_min = min(float(np.min(table.lam_plus[edges])), float(np.min(table.lam_minus_abs[edges])))
    return min(math.exp(-mu_hat * table.grid.L / (2.0 * lam_min)), kappa_max)


def decide(
    recon: Reconstruction,
    table: WeightTable,
    cfg: ControlConfig,
    kappa_max: float = 1.0,
    prev: ControlDecision | None = None,
) -> ControlDecision:
    """Run the configured selection rule on the current reconstruction."""
    if cfg.controller == CONTROLLER_FIXED_MU:
        mu = float(cfg.fixed_mu)
    elif cfg.controller == CONTROLLER_MATRIX_EIG:
        mu = mu_hat_matrix(recon, table, cfg.target_rate, cfg)
    elif cfg.controller == CONTROLLER_RAYLEIGH:
        mu = mu_hat_rayleigh(recon, table, cfg.target_rate, cfg)
    else:
        raise ValueError(f"unknown controller {cfg.controller!r}")

    if mu is None:
        held = prev.kappa_star if prev is not None else kappa_max
        return ControlDecision(mu_hat=float("nan"), kappa_star=held, h_value=float("nan"), feasible=False)

    kappa = kappa_star(mu, table, kappa_max)
    h = boundary_form_H(
        recon.outgoing_trace_plus, recon.outgoing_trace_minus, kappa, LyapunovParams(mu, table)
    )
    return ControlDecision(mu_hat=mu, kappa_star=kappa, h_value=h, feasible=True)
