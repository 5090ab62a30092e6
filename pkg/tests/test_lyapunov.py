import math

import numpy as np
import pytest

from hypctrl.core import RiemannState, SystemSpec, build_grid
from hypctrl.cweno import reconstruct_all
from hypctrl.lyapunov import (
    LyapunovParams,
    boundary_form_H,
    build_weight_table,
    l2_norm_sq,
    lyapunov_value,
    matrix_M,
    max_eig_2x2,
    min_eig_2x2,
    node_weights,
    rayleigh_quotient,
    scaled_lyapunov,
    weights,
)
from hypctrl.scenarios import initial_averages, make_scenario


def _table(n=32, scenario="linear"):
    grid = build_grid(1.0, n)
    return build_weight_table(grid, make_scenario(scenario).system)


def test_table_nodes_and_speed_integrals_unit_speeds():
    table = _table(8)
    grid = table.grid
    np.testing.assert_array_equal(table.nodes[0::2], grid.edges)
    np.testing.assert_array_equal(table.nodes[1::2], grid.centers)
    np.testing.assert_allclose(table.int_plus, table.nodes, atol=1e-15)
    np.testing.assert_allclose(table.int_minus, 1.0 - table.nodes, atol=1e-15)


def test_table_speed_integrals_variable_speed():
    # lam_plus = 1 + x/2 has the closed-form integral 2 ln(1 + x/2)
    grid = build_grid(1.0, 32)
    base = make_scenario("conservation").system
    system = SystemSpec(
        lambda_plus=lambda x: 1.0 + 0.5 * np.asarray(x, dtype=float),
        lambda_minus=lambda x: -(1.0 + 0.5 * np.asarray(x, dtype=float)),
        dlambda_dx=lambda x: np.stack((np.full(np.shape(x), 0.5),) * 2, axis=-1),
        source=base.source,
        source_matrix=base.source_matrix,
    )
    table = build_weight_table(grid, system)
    exact_p = 2.0 * np.log(1.0 + 0.5 * table.nodes)
    exact_m = 2.0 * (np.log(1.5) - np.log(1.0 + 0.5 * table.nodes))
    np.testing.assert_allclose(table.int_plus, exact_p, atol=1e-10)
    np.testing.assert_allclose(table.int_minus, exact_m, atol=1e-10)


def test_node_weights_closed_form_and_monotonicity():
    table = _table(16)
    for mu in (0.0, 0.5, 3.0):
        params = LyapunovParams(mu, table)
        wp, wm = node_weights(params)
        np.testing.assert_allclose(wp, np.exp(-mu * table.nodes), atol=1e-14)
        np.testing.assert_allclose(wm, np.exp(-mu * (1.0 - table.nodes)), atol=1e-14)
        assert np.all(wp > 0.0) and np.all(wm > 0.0)

    # pointwise monotone decreasing in mu_tilde
    w_lo = node_weights(LyapunovParams(0.7, table))
    w_hi = node_weights(LyapunovParams(2.9, table))
    assert np.all(w_lo[0] >= w_hi[0]) and np.all(w_lo[1] >= w_hi[1])


def test_weights_at_arbitrary_positions_match_node_values():
    table = _table(8)
    params = LyapunovParams(1.7, table)
    wp_nodes, wm_nodes = node_weights(params)
    wp, wm = weights(table.nodes, params)
    np.testing.assert_allclose(wp, wp_nodes, atol=1e-13)
    np.testing.assert_allclose(wm, wm_nodes, atol=1e-13)
    with pytest.raises(ValueError):
        weights(np.array([-0.1]), params)
    with pytest.raises(ValueError):
        weights(np.array([1.1]), params)
    with pytest.raises(ValueError):
        LyapunovParams(-1.0, table)


def test_lyapunov_value_matches_closed_form_integral():
    # for r = (sin(pi x), cos(pi x)) and mu_tilde = 2 the cross terms cancel
    # and V = (1 - e^-2)/2
    exact = (1.0 - math.exp(-2.0)) / 2.0
    grid = build_grid(1.0, 256)
    table = build_weight_table(grid, make_scenario("linear").system)
    recon = reconstruct_all(initial_averages("sincos", grid), grid)
    value = lyapunov_value(recon, LyapunovParams(2.0, table))
    assert abs(value - exact) < 1e-9
    assert abs(l2_norm_sq(recon, grid) - 1.0) < 1e-9


def test_lyapunov_equals_l2_when_mu_zero():
    table = _table(16)
    rng = np.random.default_rng(20)
    recon = reconstruct_all(RiemannState(avg=rng.normal(size=(16, 2)), t=0.0), table.grid)
    params = LyapunovParams(0.0, table)
    assert lyapunov_value(recon, params) == pytest.approx(l2_norm_sq(recon, table.grid), rel=1e-14)


def test_scaled_lyapunov_dominates_l2():
    rng = np.random.default_rng(21)
    for scenario in ("linear", "general"):
        table = _table(24, scenario)
        for _ in range(20):
            recon = reconstruct_all(RiemannState(avg=rng.normal(size=(24, 2)), t=0.0), table.grid)
            mu = rng.uniform(0.0, 4.0)
            params = LyapunovParams(mu, table)
            scaled = scaled_lyapunov(lyapunov_value(recon, params), params)
            assert scaled >= l2_norm_sq(recon, table.grid) * (1.0 - 1e-13)


def test_matrix_M_frozen_eigenvalues_linear_scenario():
    # mu_tilde = 0 makes both weights 1, so M = 2 Gbar with eigenvalues
    # {-2/e, 0}: the exchange source is marginally anti-dissipative
    table = _table(8)
    m = matrix_M(np.array([0.3, -0.1]), 0.5, LyapunovParams(0.0, table))
    np.testing.assert_allclose(min_eig_2x2(m), -2.0 / math.e, atol=1e-14)
    np.testing.assert_allclose(max_eig_2x2(m), 0.0, atol=1e-14)


def test_eig_closed_forms_match_lapack():
    rng = np.random.default_rng(22)
    for _ in range(200):
        a, b, c = rng.normal(size=3) * 10.0
        m = np.array([[a, b], [b, c]])
        lo, hi = np.linalg.eigvalsh(m)
        assert min_eig_2x2(m) == pytest.approx(lo, abs=1e-12)
        assert max_eig_2x2(m) == pytest.approx(hi, abs=1e-12)
    with pytest.raises(ValueError):
        min_eig_2x2(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_boundary_form_sign_tracks_gain():
    table = _table(8)
    rng = np.random.default_rng(23)
    for _ in range(100):
        mu = rng.uniform(0.0, 6.0)
        kappa = rng.uniform(0.0, 1.0)
        tp, tm = rng.normal(size=2)
        h = boundary_form_H(tp, tm, kappa, LyapunovParams(mu, table))
        expected_sign = np.sign(kappa**2 - math.exp(-mu))
        if tp != 0.0 or tm != 0.0:
            assert np.sign(h) == expected_sign or abs(h) < 1e-14
    # full reflection with flat weights returns exactly the outgoing energy
    assert boundary_form_H(1.3, -0.4, 1.0, LyapunovParams(0.0, table)) == pytest.approx(0.0, abs=1e-15)


def test_rayleigh_quotient_sandwiched_by_node_eigenvalues():
    rng = np.random.default_rng(24)
    for scenario in ("linear", "general"):
        table = _table(16, scenario)
        for _ in range(5):
            recon = reconstruct_all(RiemannState(avg=rng.normal(size=(16, 2)), t=0.0), table.grid)
            mu = rng.uniform(0.0, 3.0)
            params = LyapunovParams(mu, table)
            q = rayleigh_quotient(recon, params)
            nodes = np.stack((recon.left, recon.center, recon.right), axis=1)
            lo, hi = np.inf, -np.inf
            for j in range(16):
                for k in range(3):
                    x = float(table.nodes[2 * j + k])
                    m = matrix_M(nodes[j, k], x, params)
                    lo = min(lo, min_eig_2x2(m))
                    hi = max(hi, max_eig_2x2(m))
            assert lo - 1e-10 <= q <= hi + 1e-10


def test_rayleigh_quotient_matches_direct_assembly():
    table = _table(16)
    grid = table.grid
    recon = reconstruct_all(initial_averages("sincos", grid), grid)
    params = LyapunovParams(1.3, table)
    system = table.system

    num = den = 0.0
    simpson = np.array([1.0, 4.0, 1.0]) / 6.0
    nodes = np.stack((recon.left, recon.center, recon.right), axis=1)
    for j in range(grid.n):
        for k in range(3):
            x = float(table.nodes[2 * j + k])
            wp = math.exp(-params.mu_tilde * x)
            wm = math.exp(-params.mu_tilde * (1.0 - x))
            r = nodes[j, k]
            gr = system.source_matrix(r, np.array(x)) @ r
            e = wp * r[0] ** 2 + wm * r[1] ** 2
            d = params.mu_tilde * e + 2.0 * (wp * r[0] * gr[0] + wm * r[1] * gr[1])
            num += simpson[k] * d * grid.dx
            den += simpson[k] * e * grid.dx
    assert rayleigh_quotient(recon, params) == pytest.approx(num / den, rel=1e-12)


def test_rayleigh_quotient_rejects_zero_state():
    table = _table(8)
    recon = reconstruct_all(RiemannState(avg=np.zeros((8, 2)), t=0.0), table.grid)
    with pytest.raises(ValueError):
        rayleigh_quotient(recon, LyapunovParams(1.0, table))
