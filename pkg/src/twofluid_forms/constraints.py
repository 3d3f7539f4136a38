from dataclasses import dataclass

import numpy as np

from src.assembly.context import build_context
from src.assembly.discretization import Discretization
from src.levelset_kernel.properties import FluidParams
from src.levelset_kernel.properties import eval_props
from src.twofluid_forms.state import State

# the load vectors keep the factor of the published kinetic-energy variation,
# twice its exact value; the multiplier absorbs it
PRINTED_VARIATION_FACTORS = np.array([1.0, 2.0, 1.0])


@dataclass(frozen=True)
class ConstraintValues:
    """
    Global conservation defects of one step.

    Attributes:
        h1 (float): Mass change, kg/m.
        h2 (float): Kinetic-energy imbalance, W/m.
        h3 (float): Potential-energy imbalance, W/m.
    """

    h1: float
    h2: float
    h3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.h1, self.h2, self.h3])


class ConstraintProblem:
    """
    The constraints h_j as functions of the multipliers, with the velocity, phi_0,
    the perturbation fields and alpha held fixed.

    Everything that does not depend on the level set is evaluated once at
    construction; each evaluation then only recomputes the density.

    Attributes:
        disc (Discretization): The discretization.
        params (FluidParams): Material data.
        weights (numpy.ndarray): Quadrature weights, shape (E, Q).
        rho_old (numpy.ndarray): Density at level n.
        alpha (numpy.ndarray): Floored alpha of the iterate.
        phi0 (numpy.ndarray): phi_0 at the quadrature points.
        perturbations (numpy.ndarray): phi_i at the quadrature points, shape (3, E, Q).
    """

    def __init__(self, disc: Discretization, state_n: State, iterate: State, dt: float, params: FluidParams):
        ctx = build_context(disc, state_n, iterate, dt, params)
        table = disc.tables["phi"]
        self.disc = disc
        self.params = params
        self.dt = dt
        self.weights = ctx.weights
        self.rho_old = ctx.old.rho
        self.alpha = ctx.new.alpha
        self.phi0 = table.evaluate(iterate.phi)
        self.perturbations = np.stack([table.evaluate(f) for f in iterate.phi_pert])

        g = params.gravity
        u_mid = ctx.u_mid
        self.kinetic_weight = 0.5 * np.einsum("eqi,eqi->eq", ctx.old.u, ctx.new.u) / dt
        self.convective_power = np.einsum("eqi,eqi->eq", u_mid, ctx.convection_mid)
        self.potential_weight = np.einsum("eqi,i->eq", ctx.coords, g) / dt
        self.gravity_power = np.einsum("eqi,i->eq", u_mid, g)

    def _density(self, lambdas):
        phi = self.phi0 + np.einsum("i,ieq->eq", np.asarray(lambdas, dtype=float), self.perturbations)
        rho, _, drho, _ = eval_props(phi, self.alpha, self.params)
        return rho, drho

    def integrands(self, lambdas) -> np.ndarray:
        """Pointwise integrands of (h1, h2, h3), shape (3, E, Q)."""
        rho_new, _ = self._density(lambdas)
        jump = rho_new - self.rho_old
        rho_mid = 0.5 * (rho_new + self.rho_old)
        return np.stack(
            [
                jump,
                jump * self.kinetic_weight - rho_mid * self.convective_power,
                jump * self.potential_weight - rho_mid * self.gravity_power,
            ]
        )

    def values(self, lambdas) -> np.ndarray:
        """The constraint values (h1, h2, h3) at the given multipliers."""
        return np.einsum("eq,jeq->j", self.weights, self.integrands(lambdas))

    def magnitudes(self, lambdas) -> np.ndarray:
        """
        Scale of the rounding errors in values, per constraint: the integrands
        with every term taken in absolute value and the density jump replaced
        by rho^{n+1} + rho^n, whose rounding the jump inherits.
        """
        rho_new, _ = self._density(lambdas)
        level_sum = np.abs(rho_new) + np.abs(self.rho_old)
        rho_mid = 0.5 * level_sum
        terms = np.stack(
            [
                level_sum,
                level_sum * np.abs(self.kinetic_weight) + rho_mid * np.abs(self.convective_power),
                level_sum * np.abs(self.potential_weight) + rho_mid * np.abs(self.gravity_power),
            ]
        )
        return np.einsum("eq,jeq->j", self.weights, terms)

    def variation_weights(self) -> np.ndarray:
        """
        Pointwise factors a_j with d h_j [v] = (d rho / d phi * v, a_j) exactly,
        shape (3, E, Q).
        """
        return np.stack(
            [
                np.ones_like(self.kinetic_weight),
                self.kinetic_weight - 0.5 * self.convective_power,
                self.potential_weight - 0.5 * self.gravity_power,
            ]
        )

    def jacobian(self, lambdas) -> np.ndarray:
        """The exact 3x3 derivative J[j, i] = d h_j / d lambda_i."""
        _, drho = self._density(lambdas)
        return np.einsum("eq,eq,jeq,ieq->ji", self.weights, drho, self.variation_weights(), self.perturbations)

    def variations(self, lambdas, printed: bool = True) -> np.ndarray:
        """
        Variation vectors over the level-set test basis, shape (3, n_phi).

        Args:
            lambdas (numpy.ndarray): Multipliers at which d rho / d phi is evaluated.
            printed (bool): Scale the kinetic variation by the published factor 2.

        Returns:
            numpy.ndarray: One vector per constraint.
        """
        _, drho = self._density(lambdas)
        table = self.disc.tables["phi"]
        factors = PRINTED_VARIATION_FACTORS if printed else np.ones(3)
        weights = self.variation_weights() * factors[:, None, None]
        return np.stack(
            [
                table.scatter(np.einsum("eq,eq,eq,eqa->ea", self.weights, drho, a, table.values))
                for a in weights
            ]
        )


def constraint_h(disc: Discretization, state_n: State, iterate: State, dt: float, params: FluidParams) -> ConstraintValues:
    """
    Evaluates h1 = int(rho^{n+1} - rho^n),
    h2 = ((rho^{n+1} - rho^n) / dt, u^n . u^{n+1} / 2) - (rho^{n+1/2} u^{n+1/2}, u^{n+1/2} . grad u^{n+1/2})
    and h3 = ((rho^{n+1} - rho^n) / dt, x . g) - (rho^{n+1/2}, u^{n+1/2} . g)
    at the iterate's composed level set.

    Args:
        disc (Discretization): The discretization.
        state_n (State): Accepted state at level n.
        iterate (State): Iterate of level n+1.
        dt (float): Time-step size in seconds.
        params (FluidParams): Material data.

    Returns:
        ConstraintValues: The three defects.
    """
    values = ConstraintProblem(disc, state_n, iterate, dt, params).values(iterate.lambdas)
    return ConstraintValues(*(float(v) for v in values))


def constraint_variations(
    disc: Discretization, state_n: State, iterate: State, dt: float, params: FluidParams, printed: bool = True
) -> np.ndarray:
    """
    Variation vectors of h1..h3 with respect to phi^{n+1}, at the composed level set.

    Args:
        disc (Discretization): The discretization.
        state_n (State): Accepted state at level n.
        iterate (State): Iterate of level n+1.
        dt (float): Time-step size in seconds.
        params (FluidParams): Material data.
        printed (bool): Use the published (doubled) kinetic variation.

    Returns:
        numpy.ndarray: Shape (3, n_phi).
    """
    return ConstraintProblem(disc, state_n, iterate, dt, params).variations(iterate.lambdas, printed=printed)
