from dataclasses import dataclass

import numpy as np

from src.assembly.context import build_context
from src.assembly.context import field_values
from src.assembly.discretization import Discretization
from src.levelset_kernel.properties import FluidParams
from src.twofluid_forms.state import FormKind
from src.twofluid_forms.state import State


def energy_kinetic(disc: Discretization, state: State, params: FluidParams) -> float:
    """Kinetic energy int(rho u . u / 2) in J/m."""
    values = field_values(disc, state, params)
    return disc.integrate(0.5 * values.rho * np.einsum("eqi,eqi->eq", values.u, values.u))


def energy_potential(disc: Discretization, state: State, params: FluidParams) -> float:
    """Potential energy -int(rho x . g) in J/m."""
    values = field_values(disc, state, params)
    return disc.integrate(-values.rho * np.einsum("eqi,i->eq", disc.coords, params.gravity))


def total_mass(disc: Discretization, state: State, params: FluidParams) -> float:
    """Mass int(rho) in kg/m."""
    return disc.integrate(field_values(disc, state, params).rho)


def dissipation(disc: Discretization, state_n: State, state_np1: State, dt: float, params: FluidParams) -> float:
    """
    Viscous dissipation 2 ||mu^{1/2} sym grad u^{n+1/2}||^2 of a step in W/m.

    Args:
        disc (Discretization): The discretization.
        state_n (State): State at level n.
        state_np1 (State): State at level n+1.
        dt (float): Time-step size in seconds.
        params (FluidParams): Material data.

    Returns:
        float: The dissipation rate.
    """
    ctx = build_context(disc, state_n, state_np1, dt, params)
    g = ctx.grad_u_mid
    sym = 0.5 * (g + np.swapaxes(g, -1, -2))
    return disc.integrate(2.0 * ctx.mu_mid * np.einsum("eqij,eqij->eq", sym, sym))


def energy_rates_actual(disc: Discretization, state_n: State, state_np1: State, dt: float, params: FluidParams):
    """
    Rates of change of the kinetic and potential energy from their values.

    Returns:
        tuple[float, float]: (dE_kin / dt, dE_pot / dt) in W/m.
    """
    kinetic = (energy_kinetic(disc, state_np1, params) - energy_kinetic(disc, state_n, params)) / dt
    potential = (energy_potential(disc, state_np1, params) - energy_potential(disc, state_n, params)) / dt
    return kinetic, potential


def energy_rates_weakform(
    disc: Discretization,
    state_n: State,
    state_np1: State,
    dt: float,
    params: FluidParams,
    kind: FormKind | None = None,
):
    """
    Energy rates experienced by the discrete momentum equation, obtained by
    testing its inertial and gravity terms with u^{n+1/2}.

    For the conservative forms the kinetic rate is
    (u^{n+1/2}, (rho^{n+1} u^{n+1} - rho^n u^n) / dt) - (grad u^{n+1/2}, rho^{n+1/2} u^{n+1/2} x u^{n+1/2}),
    for the convective form it is
    (u^{n+1/2}, rho^{n+1/2} (u^{n+1} - u^n) / dt) + (u^{n+1/2}, rho^{n+1/2} u^{n+1/2} . grad u^{n+1/2}).
    The potential rate is -(u^{n+1/2}, rho^{n+1/2} g) in both cases.

    Returns:
        tuple[float, float]: (dE_kin / dt, dE_pot / dt) in W/m.
    """
    ctx = build_context(disc, state_n, state_np1, dt, params)
    old, new = ctx.old, ctx.new
    u_mid = ctx.u_mid
    convective_power = np.einsum("eqi,eqi->eq", u_mid, ctx.convection_mid)
    if kind is not None and kind.convective:
        inertia = ctx.rho_mid * np.einsum("eqi,eqi->eq", u_mid, new.u - old.u) / dt
        kinetic = inertia + ctx.rho_mid * convective_power
    else:
        momentum_change = (new.rho[..., None] * new.u - old.rho[..., None] * old.u) / dt
        kinetic = np.einsum("eqi,eqi->eq", u_mid, momentum_change) - ctx.rho_mid * convective_power
    potential = -ctx.rho_mid * np.einsum("eqi,i->eq", u_mid, params.gravity)
    return disc.integrate(kinetic), disc.integrate(potential)


def divergence_norms(disc: Discretization, state: State, state_prev: State | None = None):
    """
    Norms of the velocity divergence sampled at the quadrature points.

    Args:
        disc (Discretization): The discretization.
        state (State): The state.
        state_prev (State | None): Previous state; when given, the midpoint
            velocity of the two is measured.

    Returns:
        tuple[float, float, float]: (L1, L2, Linf).
    """
    t = disc.tables

    def divergence(s):
        return t["u_x"].evaluate_gradient(s.u_x)[..., 0] + t["u_y"].evaluate_gradient(s.u_y)[..., 1]

    div = divergence(state)
    if state_prev is not None:
        div = 0.5 * (div + divergence(state_prev))
    l1 = disc.integrate(np.abs(div))
    l2 = float(np.sqrt(disc.integrate(div**2)))
    return l1, l2, float(np.max(np.abs(div)))


@dataclass(frozen=True)
class MomentumBalance:
    """
    Global momentum statement of a step on a closed box, per component.

    Attributes:
        rate (numpy.ndarray): int(rho^{n+1} u^{n+1} - rho^n u^n) / dt.
        gravity (numpy.ndarray): int(rho^{n+1/2} g).
        wall_reaction (numpy.ndarray): rate - gravity, the force the walls exert.
    """

    rate: np.ndarray
    gravity: np.ndarray
    wall_reaction: np.ndarray


def momentum_balance(disc: Discretization, state_n: State, state_np1: State, dt: float, params: FluidParams) -> MomentumBalance:
    """
    Momentum rate, gravity load and their difference for one step.

    Args:
        disc (Discretization): The discretization.
        state_n (State): State at level n.
        state_np1 (State): State at level n+1.
        dt (float): Time-step size in seconds.
        params (FluidParams): Material data.

    Returns:
        MomentumBalance: The balance.
    """
    ctx = build_context(disc, state_n, state_np1, dt, params)
    momentum_change = (ctx.new.rho[..., None] * ctx.new.u - ctx.old.rho[..., None] * ctx.old.u) / dt
    rate = np.einsum("eq,eqi->i", disc.weights, momentum_change)
    gravity = disc.integrate(ctx.rho_mid) * params.gravity
    return MomentumBalance(rate=rate, gravity=gravity, wall_reaction=rate - gravity)


def max_energy_curve_gap(times_a, energies_a, times_b, energies_b) -> float:
    """
    Largest pointwise difference of two energy curves, with curve b linearly
    interpolated to the times of curve a inside their common time range.

    Returns:
        float: The maximum gap in J/m.
    """
    times_a = np.asarray(times_a, dtype=float)
    end = min(times_a[-1], float(np.max(times_b)))
    mask = times_a <= end
    interpolated = np.interp(times_a[mask], times_b, energies_b)
    return float(np.max(np.abs(np.asarray(energies_a, dtype=float)[mask] - interpolated)))
