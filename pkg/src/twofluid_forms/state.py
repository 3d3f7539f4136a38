from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from enum import Enum

import numpy as np

from src.assembly.discretization import Discretization
from src.spline_spaces.spaces import Rectangle


class Formulation(str, Enum):
    CONSERVATIVE = "conservative"
    ENERGY_CORRECTED = "energy-corrected"
    CONVECTIVE = "convective"


class Constraint(str, Enum):
    MASS = "mass"
    KINETIC = "kinetic"
    POTENTIAL = "potential"

    @property
    def index(self) -> int:
        return list(Constraint).index(self)


DEFAULT_CONSTRAINTS = {
    Formulation.CONSERVATIVE: (),
    Formulation.ENERGY_CORRECTED: (Constraint.MASS, Constraint.KINETIC, Constraint.POTENTIAL),
    Formulation.CONVECTIVE: (Constraint.MASS,),
}


@dataclass(frozen=True)
class FormKind:
    """
    The variational formulation together with the global constraints it enforces.

    Attributes:
        formulation (Formulation): Momentum form and default constraint set.
        constraints (tuple[Constraint, ...]): Active constraints in index order.
    """

    formulation: Formulation
    constraints: tuple[Constraint, ...]

    def __post_init__(self):
        ordered = tuple(sorted(set(self.constraints), key=lambda c: c.index))
        object.__setattr__(self, "constraints", ordered)

    @classmethod
    def from_name(cls, name: str, constraints=None) -> "FormKind":
        """
        Builds a FormKind from its name, optionally overriding the constraint set.

        Args:
            name (str): "conservative", "energy-corrected" or "convective".
            constraints (Iterable[str] | None): Constraint names, or None for the default.

        Returns:
            FormKind: The kind.

        Raises:
            ValueError: For an unknown formulation or constraint name.
        """
        try:
            formulation = Formulation(name)
        except ValueError:
            choices = ", ".join(f.value for f in Formulation)
            raise ValueError(f"unknown formulation '{name}', expected one of {choices}") from None
        if constraints is None:
            return cls(formulation, DEFAULT_CONSTRAINTS[formulation])
        try:
            active = tuple(Constraint(c) for c in constraints)
        except ValueError as exc:
            raise ValueError(f"unknown constraint in {list(constraints)}: {exc}") from None
        return cls(formulation, active)

    @property
    def convective(self) -> bool:
        return self.formulation is Formulation.CONVECTIVE

    @property
    def constraint_indices(self) -> tuple[int, ...]:
        return tuple(c.index for c in self.constraints)

    @property
    def name(self) -> str:
        return self.formulation.value


@dataclass
class State:
    """
    Coefficient vectors of one time level, plus the per-step constraint unknowns.

    Inside a step `phi` holds the uncorrected part phi_0 and the level set is
    phi_0 + sum_i lambdas[i] * phi_pert[i]; accepted states have phi_pert = 0.

    Attributes:
        u_x (numpy.ndarray): x-velocity coefficients in m/s.
        u_y (numpy.ndarray): y-velocity coefficients in m/s.
        p (numpy.ndarray): Pressure coefficients in Pa.
        phi (numpy.ndarray): Level-set coefficients in m.
        alpha (numpy.ndarray): Redistancing scale coefficients.
        phi_pert (numpy.ndarray): Perturbation fields, shape (3, n_phi).
        lambdas (numpy.ndarray): Lagrange multipliers, shape (3,).
        time (float): Simulation time in seconds.
    """

    u_x: np.ndarray
    u_y: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    alpha: np.ndarray
    phi_pert: np.ndarray = field(default=None)
    lambdas: np.ndarray = field(default=None)
    time: float = 0.0

    def __post_init__(self):
        if self.phi_pert is None:
            self.phi_pert = np.zeros((3, len(self.phi)))
        if self.lambdas is None:
            self.lambdas = np.zeros(3)

    def composed_phi(self) -> np.ndarray:
        return self.phi + self.lambdas @ self.phi_pert

    def copy(self) -> "State":
        return replace(
            self,
            u_x=self.u_x.copy(),
            u_y=self.u_y.copy(),
            p=self.p.copy(),
            phi=self.phi.copy(),
            alpha=self.alpha.copy(),
            phi_pert=self.phi_pert.copy(),
            lambdas=self.lambdas.copy(),
        )

    def accepted(self, time: float) -> "State":
        """Folds the perturbations into phi and stamps the new time."""
        return replace(
            self,
            phi=self.composed_phi(),
            phi_pert=np.zeros_like(self.phi_pert),
            lambdas=self.lambdas.copy(),
            time=time,
        )

    def max_boundary_normal_velocity(self, disc: Discretization) -> float:
        values = np.concatenate([self.u_x[disc.boundary.u_x], self.u_y[disc.boundary.u_y]])
        return float(np.max(np.abs(values))) if values.size else 0.0


def state_from_fields(disc: Discretization, u_x=None, u_y=None, p=None, phi=None, time: float = 0.0) -> State:
    """
    Builds a state from coefficient vectors, zero where omitted, with alpha
    projected from phi.

    Args:
        disc (Discretization): The discretization.
        u_x, u_y, p, phi (numpy.ndarray | None): Coefficient vectors.
        time (float): Simulation time in seconds.

    Returns:
        State: The state.
    """

    def vector(values, n):
        return np.zeros(n) if values is None else np.array(values, dtype=float)

    phi = vector(phi, disc.n_phi)
    return State(
        u_x=vector(u_x, disc.n_u_x),
        u_y=vector(u_y, disc.n_u_y),
        p=vector(p, disc.n_p),
        phi=phi,
        alpha=disc.alpha_projector.project(phi),
        time=time,
    )


def column_signed_distance(x, y, column: Rectangle):
    """
    Signed distance to the free surface of a water column standing in the
    lower-left corner of the box, positive inside the water.

    The walls of the box are not part of the interface, so only the top and
    right sides of the column count.

    Args:
        x (numpy.ndarray): Abscissae in meters.
        y (numpy.ndarray): Ordinates in meters.
        column (Rectangle): The column, with x0 and y0 on the box walls.

    Returns:
        numpy.ndarray: Signed distance in meters.
    """
    a, b = column.x1, column.y1
    inside = (x <= a) & (y <= b)
    inner = np.minimum(a - x, b - y)
    outer = np.sqrt(np.maximum(x - a, 0.0) ** 2 + np.maximum(y - b, 0.0) ** 2)
    return np.where(inside, inner, -outer)


def initial_dambreak_state(disc: Discretization, column: Rectangle) -> State:
    """
    Fluid at rest with the water column in the lower-left corner.

    Args:
        disc (Discretization): The discretization.
        column (Rectangle): The water column.

    Returns:
        State: u = 0, p = 0, phi the interpolated signed distance, alpha projected.
    """
    domain = disc.spaces.domain
    if column.x0 != domain.x0 or column.y0 != domain.y0:
        raise ValueError("the water column must stand in the lower-left corner of the domain")
    if column.x1 > domain.x1 or column.y1 > domain.y1:
        raise ValueError(f"water column {column} does not fit inside the domain {domain}")
    phi = disc.spaces.levelset.interpolate_greville(lambda x, y: column_signed_distance(x, y, column))
    return state_from_fields(disc, phi=phi)
