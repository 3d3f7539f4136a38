import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.sparse import coo_matrix

from src.assembly.assembler import apply_update
from src.assembly.assembler import assemble_jacobian
from src.assembly.assembler import assemble_residual
from src.assembly.assembler import layout_for
from src.assembly.context import build_context
from src.assembly.discretization import build_discretization
from src.diagnostics_io import energies
from src.levelset_kernel.properties import FluidParams
from src.levelset_kernel.properties import eval_props
from src.levelset_kernel.properties import floor_alpha
from src.spline_spaces.spaces import Rectangle
from src.twofluid_forms import forms
from src.twofluid_forms.constraints import ConstraintProblem
from src.twofluid_forms.constraints import constraint_h
from src.twofluid_forms.constraints import constraint_variations
from src.twofluid_forms.state import Constraint
from src.twofluid_forms.state import FormKind
from src.twofluid_forms.state import Formulation
from src.twofluid_forms.state import column_signed_distance
from src.twofluid_forms.state import initial_dambreak_state
from src.twofluid_forms.state import state_from_fields
from tests.conftest import pointwise_field
from tests.conftest import pointwise_gradient
from tests.conftest import random_state
from tests.conftest import solenoidal
from tests.conftest import tilted_levelset


def test_form_kind_defaults():
    assert FormKind.from_name("conservative").constraints == ()
    assert FormKind.from_name("convective").constraint_indices == (0,)
    kind = FormKind.from_name("energy-corrected")
    assert kind.constraint_indices == (0, 1, 2)
    assert not kind.convective
    assert FormKind.from_name("convective").convective


def test_form_kind_overrides_and_errors():
    kind = FormKind.from_name("conservative", ["potential", "mass", "mass"])
    assert kind.constraints == (Constraint.MASS, Constraint.POTENTIAL)
    assert kind.formulation is Formulation.CONSERVATIVE
    assert FormKind.from_name("energy-corrected", []).constraints == ()
    with pytest.raises(ValueError):
        FormKind.from_name("semi-implicit")
    with pytest.raises(ValueError):
        FormKind.from_name("conservative", ["momentum"])


def test_state_composition_and_acceptance(disc):
    state = random_state(disc, seed=1)
    state.phi_pert[0] = 1.0
    state.phi_pert[2] = 2.0
    state.lambdas = np.array([0.1, 5.0, -0.2])
    assert_allclose(state.composed_phi(), state.phi + 0.1 - 0.4)
    accepted = state.accepted(0.25)
    assert accepted.time == 0.25
    assert_allclose(accepted.phi, state.composed_phi())
    assert_allclose(accepted.phi_pert, 0.0)
    assert_allclose(accepted.composed_phi(), state.composed_phi())
    copy = state.copy()
    copy.u_x[0] += 1.0
    assert copy.u_x[0] != state.u_x[0]


def test_column_signed_distance():
    column = Rectangle(0.0, 0.0, 1.0, 2.0)
    x = np.array([0.5, 0.9, 0.2, 2.0, 4.0])
    y = np.array([0.5, 1.0, 2.5, 1.0, 6.0])
    assert_allclose(column_signed_distance(x, y, column), [0.5, 0.1, -0.5, -1.0, -5.0])


def test_initial_dambreak_state(disc):
    column = Rectangle(0.0, 0.0, 0.5, 0.25)
    state = initial_dambreak_state(disc, column)
    assert_allclose(state.u_x, 0.0)
    assert_allclose(state.p, 0.0)
    assert state.time == 0.0
    values = disc.spaces.levelset.evaluate_grid(state.phi, [0.1, 0.9], [0.1, 0.45])
    assert values[0, 0] > 0.0
    assert values[1, 1] < 0.0
    assert np.all(state.alpha > 0.0)
    with pytest.raises(ValueError):
        initial_dambreak_state(disc, Rectangle(0.1, 0.0, 0.5, 0.25))
    with pytest.raises(ValueError):
        initial_dambreak_state(disc, Rectangle(0.0, 0.0, 0.5, 0.75))


def test_rest_state_with_uniform_fluid_has_zero_residual(disc):
    params = FluidParams(rho0=2.0, rho1=2.0, g=(0.0, 0.0))
    state = initial_dambreak_state(disc, Rectangle(0.0, 0.0, 0.5, 0.25))
    for name in ("conservative", "energy-corrected", "convective"):
        residual = assemble_residual(disc, FormKind.from_name(name), state, state, 0.01, params)
        assert residual.norm() == 0.0


def test_constraint_values_match_energy_bookkeeping(disc, params):
    dt = 0.02
    state_n = random_state(disc, seed=5)
    iterate = random_state(disc, seed=6, noise=0.03)
    h = constraint_h(disc, state_n, iterate, dt, params)

    mass_change = energies.total_mass(disc, iterate, params) - energies.total_mass(disc, state_n, params)
    assert h.h1 == pytest.approx(mass_change, rel=1e-10, abs=1e-13)

    kind = FormKind.from_name("conservative")
    kin_actual, pot_actual = energies.energy_rates_actual(disc, state_n, iterate, dt, params)
    kin_weak, pot_weak = energies.energy_rates_weakform(disc, state_n, iterate, dt, params, kind)
    assert h.h2 == pytest.approx(kin_weak - kin_actual, rel=1e-9, abs=1e-10)
    assert h.h3 == pytest.approx(pot_weak - pot_actual, rel=1e-9, abs=1e-10)
    assert_allclose(h.as_array(), [h.h1, h.h2, h.h3])


def test_constraint_variations_match_finite_differences(disc, params):
    dt = 0.02
    state_n = random_state(disc, seed=7)
    iterate = random_state(disc, seed=8, noise=0.02)
    exact = constraint_variations(disc, state_n, iterate, dt, params, printed=False)
    printed = constraint_variations(disc, state_n, iterate, dt, params)
    assert_allclose(printed[[0, 2]], exact[[0, 2]])
    assert_allclose(printed[1], 2.0 * exact[1])

    layout = layout_for(disc, FormKind.from_name("conservative"))
    direction = np.random.default_rng(9).standard_normal(disc.n_phi)
    dx = np.zeros(layout.size)
    dx[layout.slice("phi")] = direction
    eps = 1e-6

    def h(sign):
        moved = apply_update(layout, iterate, sign * eps * dx)
        return constraint_h(disc, state_n, moved, dt, params).as_array()

    finite_difference = (h(1.0) - h(-1.0)) / (2 * eps)
    assert_allclose(exact @ direction, finite_difference, rtol=1e-6, atol=1e-7)


def test_multiplier_jacobian_matches_finite_differences(disc, params):
    dt = 0.02
    state_n = random_state(disc, seed=10)
    iterate = random_state(disc, seed=11)
    rng = np.random.default_rng(12)
    iterate.phi_pert = 0.01 * rng.standard_normal((3, disc.n_phi))
    problem = ConstraintProblem(disc, state_n, iterate, dt, params)
    lambdas = np.array([0.3, -0.2, 0.1])
    J = problem.jacobian(lambdas)
    eps = 1e-6
    for i in range(3):
        step = np.zeros(3)
        step[i] = eps
        column = (problem.values(lambdas + step) - problem.values(lambdas - step)) / (2 * eps)
        assert_allclose(J[:, i], column, rtol=1e-6, atol=1e-7)


def test_levelset_residual_carries_constraint_loads(disc, params):
    kind = FormKind.from_name("energy-corrected")
    state_n = random_state(disc, seed=13)
    iterate = random_state(disc, seed=14)
    loads = np.random.default_rng(15).standard_normal((3, disc.n_phi))
    base = assemble_residual(disc, kind, state_n, iterate, 0.01, params, dh_vectors=loads)
    iterate.lambdas = np.array([0.5, 0.0, -1.0])
    shifted = assemble_residual(disc, kind, state_n, iterate, 0.01, params, dh_vectors=loads)
    assert_allclose(shifted["phi"] - base["phi"], -(0.5 * loads[0] - loads[2]), atol=1e-12)
    assert_allclose(base["phi_2"], -loads[1])


def test_convective_and_conservative_momentum_agree_for_solenoidal_single_fluid(disc):
    params = FluidParams(rho0=3.0, rho1=3.0, mu0=0.4, mu1=0.4)
    state_n = solenoidal(disc, random_state(disc, seed=16, velocity=1.0), params)
    iterate = solenoidal(disc, random_state(disc, seed=17, velocity=1.0), params)
    residuals = {
        name: assemble_residual(
            disc, FormKind.from_name(name), state_n, iterate, 0.01, params, apply_dirichlet=False
        )
        for name in ("conservative", "convective")
    }
    for block in ("u_x", "u_y", "p", "phi"):
        assert_allclose(residuals["convective"][block], residuals["conservative"][block], atol=1e-10)


def _dense_mass_matrix(disc):
    table = disc.tables["phi"]
    local = np.einsum("eq,eqa,eqb->eab", disc.weights, table.values, table.values)
    r, c, v = table.triplets(table, local)
    return coo_matrix((v, (r, c)), shape=(disc.n_phi, disc.n_phi)).toarray()


def test_perturbation_residual_at_rest_is_a_scaled_mass_solve(params):
    disc = build_discretization(3, 3, Rectangle(0.0, 0.0, 1.0, 1.0))
    state = state_from_fields(disc, phi=tilted_levelset(disc))
    dt = 0.05
    ctx = build_context(disc, state, state, dt, params)
    dh = np.random.default_rng(20).standard_normal(disc.n_phi)
    phi_i = dt * np.linalg.solve(_dense_mass_matrix(disc), dh)
    assert_allclose(forms.residual_perturbation(ctx, phi_i, dh), 0.0, atol=1e-12 * np.abs(dh).max())
    assert_allclose(forms.residual_perturbation(ctx, np.zeros(disc.n_phi), dh), -dh)


def test_perturbation_residual_is_linear_and_matches_the_jacobian_block(disc, params):
    kind = FormKind.from_name("energy-corrected")
    state_n = random_state(disc, seed=21, velocity=1.0)
    iterate = random_state(disc, seed=22, velocity=1.0)
    ctx = build_context(disc, state_n, iterate, 0.01, params)
    rng = np.random.default_rng(23)
    phi, psi = rng.standard_normal((2, disc.n_phi))
    zero = np.zeros(disc.n_phi)

    def operator(field):
        return forms.residual_perturbation(ctx, field, zero)

    assert_allclose(operator(2.0 * phi - 3.0 * psi), 2.0 * operator(phi) - 3.0 * operator(psi), atol=1e-10)
    J = assemble_jacobian(disc, kind, state_n, iterate, 0.01, params)
    assert_allclose(operator(phi), J.block("phi_1", "phi_1") @ phi, atol=1e-10)


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _rotated_levelset_error(dt, end_time=0.4, omega=1.0):
    disc = build_discretization(4, 2, Rectangle(0.0, 0.0, 1.0, 0.5))
    params = FluidParams(rho0=1.0, rho1=10.0, mu0=0.5, mu1=1.5)
    kind = FormKind.from_name("conservative")
    centre = np.array([0.5, 0.25])
    slope = np.array([0.3, 1.0])

    def linear(gradient):
        return disc.spaces.levelset.interpolate_greville(
            lambda x, y: gradient[0] * (x - centre[0]) + gradient[1] * (y - centre[1])
        )

    u_x = disc.spaces.v_x.interpolate_greville(lambda x, y: -omega * (y - centre[1]))
    u_y = disc.spaces.v_y.interpolate_greville(lambda x, y: omega * (x - centre[0]))
    state = state_from_fields(disc, u_x=u_x, u_y=u_y, phi=linear(slope))
    steps = int(round(end_time / dt))
    for _ in range(steps):
        iterate = state.copy()
        residual = assemble_residual(disc, kind, state, iterate, dt, params)["phi"]
        C = assemble_jacobian(disc, kind, state, iterate, dt, params).block("phi", "phi").toarray()
        state = state.copy()
        state.phi = iterate.phi - np.linalg.solve(C, residual)
    exact = linear(_rotation(omega * end_time) @ slope)
    return np.abs(state.phi - exact).max()


def test_levelset_advection_converges_at_second_order_in_time():
    errors = [_rotated_levelset_error(dt) for dt in (0.1, 0.05, 0.025)]
    ratios = np.array(errors[:-1]) / np.array(errors[1:])
    assert np.all(ratios > 3.6)
    assert errors[-1] < 1e-4


def _moving_pair(disc, params, alpha=None):
    state_n = solenoidal(disc, random_state(disc, seed=24, velocity=0.5), params)
    iterate = solenoidal(disc, random_state(disc, seed=25, velocity=0.5), params)
    state_n.phi = tilted_levelset(disc, slope=0.3, height=0.25)
    iterate.phi = tilted_levelset(disc, slope=-0.2, height=0.27)
    if alpha is not None:
        state_n.alpha = np.full(disc.n_phi, alpha)
        iterate.alpha = np.full(disc.n_phi, alpha)
    return state_n, iterate


def test_potential_constraint_is_the_weighted_density_transport_defect(params):
    disc = build_discretization(4, 2, Rectangle(0.0, 0.0, 1.0, 0.5), quadrature_order=5)
    state_n, iterate = _moving_pair(disc, params, alpha=1.0)
    dt = 0.02
    table = disc.tables["phi"]
    u_mid = build_context(disc, state_n, iterate, dt, params).u_mid
    phi_old, phi_new = table.evaluate(state_n.phi), table.evaluate(iterate.phi)
    rho_old, _, drho_old, _ = eval_props(phi_old, np.ones_like(phi_old), params)
    rho_new, _, drho_new, _ = eval_props(phi_new, np.ones_like(phi_new), params)
    grad_rho_mid = 0.5 * (
        drho_old[..., None] * table.evaluate_gradient(state_n.phi)
        + drho_new[..., None] * table.evaluate_gradient(iterate.phi)
    )
    transport = (rho_new - rho_old) / dt + np.einsum("eqi,eqi->eq", u_mid, grad_rho_mid)
    potential = np.einsum("eqi,i->eq", disc.coords, params.gravity)
    expected = disc.integrate(transport * potential)
    h3 = constraint_h(disc, state_n, iterate, dt, params).h3
    # integration by parts moves u_mid . g onto the density gradient; u.n = 0 and div u = 0
    assert h3 == pytest.approx(expected, rel=1e-8, abs=1e-10)


def test_constraint_values_match_a_pointwise_quadrature_sum(params):
    domain = Rectangle(0.0, 0.0, 1.0, 0.5)
    disc = build_discretization(2, 2, domain, quadrature_order=5)
    spaces = disc.spaces
    state_n = random_state(disc, seed=24, velocity=0.5)
    iterate = random_state(disc, seed=25, velocity=0.5)
    iterate.phi_pert = 0.01 * np.random.default_rng(26).standard_normal((3, disc.n_phi))
    iterate.lambdas = np.array([0.2, -0.1, 0.3])
    dt = 0.01
    g = np.asarray(params.gravity)

    def fields(state, phi):
        u = np.array([pointwise_field(spaces.v_x, state.u_x, x, y), pointwise_field(spaces.v_y, state.u_y, x, y)])
        grad_u = np.array(
            [pointwise_gradient(spaces.v_x, state.u_x, x, y), pointwise_gradient(spaces.v_y, state.u_y, x, y)]
        )
        alpha = floor_alpha(pointwise_field(spaces.levelset, state.alpha, x, y))
        rho = eval_props(pointwise_field(spaces.levelset, phi, x, y), alpha, params)[0]
        return u, grad_u, rho

    points, weights = np.polynomial.legendre.leggauss(5)
    h_x, h_y = spaces.h_x, spaces.h_y
    expected = np.zeros(3)
    for ex in range(2):
        for ey in range(2):
            for a, wa in zip(points, weights):
                for b, wb in zip(points, weights):
                    x = domain.x0 + h_x * (ex + 0.5 * (a + 1.0))
                    y = domain.y0 + h_y * (ey + 0.5 * (b + 1.0))
                    w = wa * wb * 0.25 * h_x * h_y
                    u_old, grad_old, rho_old = fields(state_n, state_n.phi)
                    u_new, grad_new, rho_new = fields(iterate, iterate.composed_phi())
                    u_mid = 0.5 * (u_old + u_new)
                    grad_mid = 0.5 * (grad_old + grad_new)
                    rho_mid = 0.5 * (rho_old + rho_new)
                    jump = rho_new - rho_old
                    expected += w * np.array(
                        [
                            jump,
                            jump / dt * 0.5 * (u_old @ u_new) - rho_mid * (u_mid @ (grad_mid @ u_mid)),
                            jump / dt * (np.array([x, y]) @ g) - rho_mid * (u_mid @ g),
                        ]
                    )
    values = constraint_h(disc, state_n, iterate, dt, params).as_array()
    assert_allclose(values, expected, rtol=1e-10, atol=1e-10)
