import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.levelset_kernel.heaviside import smoothed_dirac
from src.levelset_kernel.heaviside import smoothed_heaviside
from src.levelset_kernel.properties import ALPHA_FLOOR
from src.levelset_kernel.properties import FluidParams
from src.levelset_kernel.properties import eval_props
from src.levelset_kernel.properties import floor_alpha
from src.levelset_kernel.redistancing import solve_alpha_projection
from src.levelset_kernel.supg import metric_tensor
from src.levelset_kernel.supg import supg_tau
from src.levelset_kernel.supg import velocity_metric_norm


def test_heaviside_branches():
    assert smoothed_heaviside(-2.0) == 0.0
    assert smoothed_heaviside(3.0) == 1.0
    assert smoothed_heaviside(0.0) == pytest.approx(0.5)
    assert smoothed_heaviside(1.0) == pytest.approx(1.0)
    x = np.linspace(-1.5, 1.5, 31)
    assert_allclose(smoothed_heaviside(x) + smoothed_heaviside(-x), 1.0, atol=1e-15)
    assert np.all(np.diff(smoothed_heaviside(x)) >= 0.0)


def test_dirac_is_derivative_of_heaviside():
    assert smoothed_dirac(0.0) == pytest.approx(np.pi / 4)
    assert smoothed_dirac(1.5) == 0.0
    assert smoothed_dirac(-1.0) == pytest.approx(0.0, abs=1e-15)
    x = np.array([-0.9, -0.3, 0.1, 0.7])
    h = 1e-6
    fd = (smoothed_heaviside(x + h) - smoothed_heaviside(x - h)) / (2 * h)
    assert_allclose(smoothed_dirac(x), fd, rtol=1e-8)
    assert isinstance(smoothed_dirac(0.2), float)


def test_fluid_params_validation():
    with pytest.raises(ValueError):
        FluidParams(rho0=0.0)
    with pytest.raises(ValueError):
        FluidParams(mu1=-1.0)
    with pytest.raises(ValueError):
        FluidParams(g=(0.0, 0.0, -9.81))
    params = FluidParams()
    assert params.delta_rho == 999.0
    assert_allclose(params.gravity, [0.0, -9.81])


def test_eval_props_limits_and_derivatives():
    params = FluidParams(rho0=1.0, rho1=1000.0, mu0=2.0, mu1=4.0)
    alpha = np.full(3, 0.1)
    rho, mu, drho, dmu = eval_props(np.array([-1.0, 0.0, 1.0]), alpha, params)
    assert_allclose(rho, [1.0, 500.5, 1000.0])
    assert_allclose(mu, [2.0, 3.0, 4.0])
    assert_allclose(drho[[0, 2]], 0.0)
    assert drho[1] == pytest.approx(999.0 * np.pi / 4 / 0.1)

    phi = np.array([-0.05, 0.02, 0.08])
    h = 1e-8
    rho_plus, mu_plus, _, _ = eval_props(phi + h, alpha, params)
    rho_minus, mu_minus, _, _ = eval_props(phi - h, alpha, params)
    _, _, drho, dmu = eval_props(phi, alpha, params)
    assert_allclose(drho, (rho_plus - rho_minus) / (2 * h), rtol=1e-6)
    assert_allclose(dmu, (mu_plus - mu_minus) / (2 * h), rtol=1e-6)


def test_eval_props_rejects_non_positive_alpha():
    with pytest.raises(ValueError):
        eval_props(np.zeros(2), np.array([0.1, 0.0]), FluidParams())
    assert_allclose(floor_alpha(np.array([-1.0, 0.0, 0.5])), [ALPHA_FLOOR, ALPHA_FLOOR, 0.5])


def test_supg_parameter():
    G = metric_tensor(0.5, 0.25)
    assert_allclose(G, np.diag([16.0, 64.0]))
    assert supg_tau(np.zeros(2), G, 0.1) == pytest.approx(0.05)
    u = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert_allclose(velocity_metric_norm(u, G), [16.0, 256.0])
    assert_allclose(supg_tau(u, G, 1e6), [0.25, 0.0625], rtol=1e-10)
    with pytest.raises(ValueError):
        supg_tau(u, G, 0.0)
    with pytest.raises(ValueError):
        metric_tensor(0.0, 1.0)


@pytest.mark.parametrize("eps_smooth", [0.0, 1.0])
def test_alpha_projection_of_linear_levelset_is_constant(disc, eps_smooth):
    a, b = 0.6, -0.8
    phi = disc.spaces.levelset.interpolate_greville(lambda x, y: a * x + b * y)
    h_x, h_y = disc.spaces.h_x, disc.spaces.h_y
    expected = np.hypot(0.5 * h_x * a, 0.5 * h_y * b)
    alpha = solve_alpha_projection(disc.tables["phi"], disc.weights, h_x, h_y, phi, eps_smooth)
    assert_allclose(alpha, expected, rtol=1e-12)


def test_alpha_projector_matches_dense_solve(disc):
    rng = np.random.default_rng(7)
    phi = rng.standard_normal(disc.n_phi)
    projector = disc.alpha_projector
    dense = projector.matrix.toarray()
    assert_allclose(dense, dense.T, atol=1e-15)
    expected = np.linalg.solve(dense, projector.load(phi))
    assert_allclose(projector.project(phi), expected, rtol=1e-10, atol=1e-14)
    assert_allclose(
        solve_alpha_projection(disc.tables["phi"], disc.weights, disc.spaces.h_x, disc.spaces.h_y, phi, 1.0),
        expected,
        rtol=1e-10,
        atol=1e-14,
    )
