from dataclasses import dataclass

import numpy as np

from src.assembly.discretization import Discretization
from src.levelset_kernel.properties import FluidParams
from src.levelset_kernel.properties import eval_props
from src.levelset_kernel.properties import floor_alpha
from src.levelset_kernel.supg import supg_tau
from src.twofluid_forms.state import State
from src.utils.errors import NonFiniteError


@dataclass
class FieldValues:
    """
    Fields of one time level at every quadrature point.

    Attributes:
        u (numpy.ndarray): Velocity, shape (E, Q, 2).
        grad_u (numpy.ndarray): grad_u[..., i, j] = d u_i / d x_j, shape (E, Q, 2, 2).
        p (numpy.ndarray): Pressure, shape (E, Q).
        phi (numpy.ndarray): Level set, shape (E, Q).
        grad_phi (numpy.ndarray): Level-set gradient, shape (E, Q, 2).
        alpha (numpy.ndarray): Floored redistancing scale, shape (E, Q).
        rho (numpy.ndarray): Density.
        mu (numpy.ndarray): Viscosity.
        drho (numpy.ndarray): d rho / d phi at fixed alpha.
        dmu (numpy.ndarray): d mu / d phi at fixed alpha.
    """

    u: np.ndarray
    grad_u: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    grad_phi: np.ndarray
    alpha: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    drho: np.ndarray
    dmu: np.ndarray

    @property
    def divergence(self) -> np.ndarray:
        return self.grad_u[..., 0, 0] + self.grad_u[..., 1, 1]


def field_values(disc: Discretization, state: State, params: FluidParams, phi: np.ndarray | None = None) -> FieldValues:
    """
    Evaluates a state at the quadrature points.

    Args:
        disc (Discretization): The discretization.
        state (State): The state.
        params (FluidParams): Material data.
        phi (numpy.ndarray | None): Level-set coefficients to use instead of the
            state's composed level set.

    Returns:
        FieldValues: The values.
    """
    t = disc.tables
    phi = state.composed_phi() if phi is None else phi
    u = np.stack([t["u_x"].evaluate(state.u_x), t["u_y"].evaluate(state.u_y)], axis=-1)
    grad_u = np.stack(
        [t["u_x"].evaluate_gradient(state.u_x), t["u_y"].evaluate_gradient(state.u_y)], axis=-2
    )
    phi_q = t["phi"].evaluate(phi)
    alpha = floor_alpha(t["phi"].evaluate(state.alpha))
    rho, mu, drho, dmu = eval_props(phi_q, alpha, params)
    return FieldValues(
        u=u,
        grad_u=grad_u,
        p=t["p"].evaluate(state.p),
        phi=phi_q,
        grad_phi=t["phi"].evaluate_gradient(phi),
        alpha=alpha,
        rho=rho,
        mu=mu,
        drho=drho,
        dmu=dmu,
    )


@dataclass
class ElementContext:
    """
    Old, new and midpoint fields at every quadrature point of every element.

    Midpoint velocity and level set are arithmetic means of the two levels; the
    midpoint density and viscosity are means of the two level properties.

    Attributes:
        disc (Discretization): The discretization.
        params (FluidParams): Material data.
        dt (float): Time-step size in seconds.
        old (FieldValues): Fields at time level n.
        new (FieldValues): Fields of the current iterate at level n+1.
        u_mid (numpy.ndarray): Shape (E, Q, 2).
        grad_u_mid (numpy.ndarray): Shape (E, Q, 2, 2).
        phi_mid (numpy.ndarray): Shape (E, Q).
        grad_phi_mid (numpy.ndarray): Shape (E, Q, 2).
        rho_mid (numpy.ndarray): Shape (E, Q).
        mu_mid (numpy.ndarray): Shape (E, Q).
        tau (numpy.ndarray): SUPG parameter, shape (E, Q).
    """

    disc: Discretization
    params: FluidParams
    dt: float
    old: FieldValues
    new: FieldValues
    u_mid: np.ndarray
    grad_u_mid: np.ndarray
    phi_mid: np.ndarray
    grad_phi_mid: np.ndarray
    rho_mid: np.ndarray
    mu_mid: np.ndarray
    tau: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.disc.weights

    @property
    def coords(self) -> np.ndarray:
        return self.disc.coords

    @property
    def levelset_rate(self) -> np.ndarray:
        """Strong residual (phi^{n+1} - phi^n) / dt + u_mid . grad phi_mid."""
        return (self.new.phi - self.old.phi) / self.dt + np.einsum(
            "eqi,eqi->eq", self.u_mid, self.grad_phi_mid
        )

    @property
    def convection_mid(self) -> np.ndarray:
        """(u_mid . grad) u_mid, shape (E, Q, 2)."""
        return np.einsum("eqij,eqj->eqi", self.grad_u_mid, self.u_mid)


def check_finite(disc: Discretization, **fields: np.ndarray) -> None:
    """
    Raises NonFiniteError naming the first element and quadrature point holding
    a NaN or infinity.

    Args:
        disc (Discretization): The discretization.
        **fields (numpy.ndarray): Arrays whose first two axes are (E, Q).
    """
    for name, values in fields.items():
        bad = ~np.isfinite(values)
        if not bad.any():
            continue
        bad = bad.reshape(bad.shape[0], bad.shape[1], -1).any(axis=-1)
        element, point = (int(i) for i in np.argwhere(bad)[0])
        x, y = disc.coords[element, point]
        raise NonFiniteError(name, element, point, (float(x), float(y)))


def build_context(disc: Discretization, state_n: State, iterate: State, dt: float, params: FluidParams) -> ElementContext:
    """
    Evaluates everything the element kernels need for one residual or Jacobian.

    Args:
        disc (Discretization): The discretization.
        state_n (State): Accepted state at time level n.
        iterate (State): Current iterate of level n+1.
        dt (float): Time-step size in seconds.
        params (FluidParams): Material data.

    Returns:
        ElementContext: The context.

    Raises:
        ValueError: If dt is not positive.
        NonFiniteError: If any field is not finite at a quadrature point.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    old = field_values(disc, state_n, params)
    new = field_values(disc, iterate, params)
    check_finite(
        disc,
        u=new.u,
        grad_u=new.grad_u,
        p=new.p,
        phi=new.phi,
        grad_phi=new.grad_phi,
        alpha=new.alpha,
        rho=new.rho,
    )
    u_mid = 0.5 * (old.u + new.u)
    return ElementContext(
        disc=disc,
        params=params,
        dt=dt,
        old=old,
        new=new,
        u_mid=u_mid,
        grad_u_mid=0.5 * (old.grad_u + new.grad_u),
        phi_mid=0.5 * (old.phi + new.phi),
        grad_phi_mid=0.5 * (old.grad_phi + new.grad_phi),
        rho_mid=0.5 * (old.rho + new.rho),
        mu_mid=0.5 * (old.mu + new.mu),
        tau=supg_tau(u_mid, disc.metric, dt),
    )
