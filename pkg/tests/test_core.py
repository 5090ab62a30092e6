import numpy as np
import pytest

from hypctrl.core import (
    BoundarySpec,
    ControlConfig,
    RiemannState,
    build_grid,
    density_flux,
)


def test_grid_geometry():
    grid = build_grid(2.0, 8)
    assert grid.dx == 0.25
    np.testing.assert_allclose(grid.edges[0], 0.0)
    np.testing.assert_allclose(grid.edges[-1], 2.0)
    np.testing.assert_allclose(np.diff(grid.edges), grid.dx)
    np.testing.assert_allclose(grid.centers, grid.edges[:-1] + 0.5 * grid.dx)


def test_grid_width_sum_reproduces_length():
    for n in (4, 7, 32, 101):
        grid = build_grid(1.0, n)
        # 1 ulp per cell of slack
        assert abs(np.sum(np.diff(grid.edges)) - 1.0) <= n * np.spacing(1.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        build_grid(0.0, 8)
    with pytest.raises(ValueError):
        build_grid(-1.0, 8)
    with pytest.raises(ValueError):
        build_grid(1.0, 3)
    with pytest.raises(ValueError):
        build_grid(1.0, 8.5)


def test_state_component_view():
    avg = np.arange(8.0).reshape(4, 2)
    state = RiemannState(avg=avg, t=1.5)
    np.testing.assert_array_equal(state.component(0), avg[:, 0])
    np.testing.assert_array_equal(state.component(1), avg[:, 1])
    assert state.t == 1.5


def test_density_flux_values_and_linearity():
    r = np.array([[1.0, 2.0], [0.5, -0.5]])
    rho, q = density_flux(r, gamma=1.0)
    np.testing.assert_allclose(rho, [3.0, 0.0])
    np.testing.assert_allclose(q, [-1.0, 1.0])

    rng = np.random.default_rng(0)
    r = rng.normal(size=(64, 2))
    rho1, q1 = density_flux(3.0 * r, gamma=2.0)
    rho2, q2 = density_flux(r, gamma=2.0)
    np.testing.assert_allclose(rho1, 3.0 * rho2, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(q1, 3.0 * q2, rtol=1e-15, atol=1e-15)


def test_boundary_spec_validation():
    BoundarySpec(kappa=0.5)
    with pytest.raises(ValueError):
        BoundarySpec(kappa=1.5)
    with pytest.raises(ValueError):
        BoundarySpec(kappa=-0.1)
    with pytest.raises(ValueError):
        BoundarySpec(kappa=0.5, kappa_max=0.0)


def test_control_config_validation():
    ControlConfig()
    with pytest.raises(ValueError):
        ControlConfig(controller="newton")
    with pytest.raises(ValueError):
        ControlConfig(controller="fixedmu")
    with pytest.raises(ValueError):
        ControlConfig(controller="fixedmu", fixed_mu=-1.0)
    with pytest.raises(ValueError):
        ControlConfig(target_rate=0.0)
    with pytest.raises(ValueError):
        ControlConfig(mu_scan_step=1e-8)  # below bisect_tol
    with pytest.raises(ValueError):
        ControlConfig(mu_scan_max=1e-3)  # below scan step
