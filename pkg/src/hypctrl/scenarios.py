"""Benchmark systems, initial data and closed-form stabilizability bounds.

All four scenarios run the two-speed transport model with speeds +-gamma on
the unit interval.  The exchange sources are written for the convention

    d_t r + Lam d_x r + G(r; x) = 0,

so a forcing +(theta/2) * K r on the right-hand side, with the exchange
matrix K = [[1, -1], [-1, 1]], corresponds to G(r) = -(theta/2) * K r.  With
theta = 1/e the zero state is only marginally stabilizable by the boundary,
which is what makes these benchmarks discriminating.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import Grid, RiemannState, SystemSpec

SCENARIOS = ("linear", "lipschitz", "general", "conservation")
INITIAL_KINDS = ("sincos", "step")

THETA = 1.0 / np.e
EXCHANGE = np.array([[1.0, -1.0], [-1.0, 1.0]])


@dataclass(frozen=True)
class Scenario:
    """A named benchmark: system coefficients plus run metadata."""

    name: str
    gamma: float
    system: SystemSpec
    initial: str
    alpha: float | None


def _const_speed(value: float):
    def speed(x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.float64(value), np.shape(x)).copy()

    return speed


def _zero_dlambda(x: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(x) + (2,))


def _exchange_source(strength):
    """Source factory for G(r) = -strength(r) * K r with scalar strength(r)."""

    def source_matrix(r: np.ndarray, x: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        s = np.asarray(strength(r), dtype=float)
        return -s[..., None, None] * EXCHANGE

    def source(r: np.ndarray, x: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        s = np.asarray(strength(r), dtype=float)
        diff = r[..., 0] - r[..., 1]
        return np.stack((-s * diff, s * diff), axis=-1)

    return source, source_matrix


def make_scenario(name: str, gamma: float = 1.0) -> Scenario:
    """Construct one of the named benchmarks."""
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}, expected one of {SCENARIOS}")
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")

    half = 0.5 * THETA
    if name == "linear":
        source, source_matrix = _exchange_source(lambda r: half)
        linear, lipschitz_c, alpha = True, THETA, THETA
    elif name == "lipschitz":
        source, source_matrix = _exchange_source(
            lambda r: half * np.cos(r[..., 0] ** 2 + r[..., 1] ** 2)
        )
        linear, lipschitz_c, alpha = False, THETA, THETA
    elif name == "general":
        # quadratic exchange: strength grows with the local imbalance
        source, source_matrix = _exchange_source(lambda r: half * (r[..., 1] - r[..., 0]))
        linear, lipschitz_c, alpha = False, None, None
    else:  # conservation
        source, source_matrix = _exchange_source(lambda r: 0.0 * r[..., 0])
        linear, lipschitz_c, alpha = True, 0.0, 0.0

    system = SystemSpec(
        lambda_plus=_const_speed(gamma),
        lambda_minus=_const_speed(-gamma),
        dlambda_dx=_zero_dlambda,
        source=source,
        source_matrix=source_matrix,
        linear_source=linear,
        lipschitz_c=lipschitz_c,
    )
    return Scenario(name=name, gamma=gamma, system=system, initial="sincos", alpha=alpha)


def initial_averages(kind: str, grid: Grid) -> RiemannState:
    """Exact cell averages of the named initial deviation profile."""
    xl, xr = grid.edges[:-1], grid.edges[1:]
    if kind == "sincos":
        # r_plus = sin(pi x), r_minus = cos(pi x)
        plus = (np.cos(np.pi * xl) - np.cos(np.pi * xr)) / (np.pi * grid.dx)
        minus = (np.sin(np.pi * xr) - np.sin(np.pi * xl)) / (np.pi * grid.dx)
    elif kind == "step":
        # both components 2 * sign(x - L/2)
        mid = 0.5 * grid.L
        above = np.clip(xr - mid, 0.0, None) - np.clip(xl - mid, 0.0, None)
        below = grid.dx - above
        plus = 2.0 * (above - below) / grid.dx
        minus = plus.copy()
    else:
        raise ValueError(f"unknown initial data {kind!r}, expected one of {INITIAL_KINDS}")
    return RiemannState(avg=np.stack((plus, minus), axis=-1), t=0.0)


@dataclass(frozen=True)
class Prop1Report:
    """Feasibility of boundary stabilization against a uniform exchange bound.

    The absorption margin of the gain kappa is kappa * |ln kappa|, maximal at
    kappa = 1/e with value 1/e.  Stabilization is guaranteed when that margin
    strictly exceeds alpha * L, so feasibility requires alpha * L < 1/e.
    """

    alpha: float
    length: float
    product: float
    margin_max: float
    margin_argmax: float
    feasible: bool
    kappa_low: float | None
    kappa_high: float | None


def prop1_threshold(alpha: float, length: float) -> Prop1Report:
    """Evaluate the closed-form stabilizability threshold for a gain scan."""
    if alpha < 0.0 or length <= 0.0:
        raise ValueError("need alpha >= 0 and length > 0")
    product = alpha * length
    margin_max = 1.0 / np.e
    feasible = product < margin_max

    kappa_low = kappa_high = None
    if feasible:
        if product == 0.0:
            kappa_low, kappa_high = 0.0, 1.0
        else:
            f = lambda k: -k * np.log(k) - product
            kappa_low = float(brentq(f, 1e-300, 1.0 / np.e, xtol=1e-14))
            kappa_high = float(brentq(f, 1.0 / np.e, 1.0 - 1e-16, xtol=1e-14))
    return Prop1Report(
        alpha=float(alpha),
        length=float(length),
        product=float(product),
        margin_max=float(margin_max),
        margin_argmax=float(1.0 / np.e),
        feasible=bool(feasible),
        kappa_low=kappa_low,
        kappa_high=kappa_high,
    )


def lipschitz_constant(scenario: Scenario) -> float:
    """Uniform bound on the source gain used by the stabilizability check."""
    if scenario.system.lipschitz_c is None:
        raise ValueError(f"scenario {scenario.name!r} has no uniform source bound")
    return scenario.system.lipschitz_c


def kac_steady_state(rho0_integral: float, length: float) -> tuple[float, float]:
    """Constant steady state carrying the initial mass, split evenly.

    The halved-integral form assumes a unit interval; other lengths get a
    warning instead of a silent rescale.
    """
    if length != 1.0:
        warnings.warn("steady-state formula assumes a unit interval", stacklevel=2)
    half = 0.5 * rho0_integral
    return half, half
