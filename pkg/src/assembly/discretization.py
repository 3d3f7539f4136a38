from collections.abc import Iterable

import numpy as np

from src.assembly.quadrature import gauss_rule
from src.assembly.sparse import BlockLayout
from src.assembly.tabulation import quadrature_points
from src.assembly.tabulation import tabulate
from src.levelset_kernel.redistancing import AlphaProjector
from src.levelset_kernel.supg import metric_tensor
from src.linear_solver.solenoidal import SolenoidalProjector
from src.spline_spaces.spaces import MixedSpaces
from src.spline_spaces.spaces import Rectangle
from src.spline_spaces.spaces import boundary_normal_dofs
from src.spline_spaces.spaces import build_mixed_spaces

FIELD_BLOCKS = ("u_x", "u_y", "p", "phi")
PERTURBATION_BLOCKS = ("phi_1", "phi_2", "phi_3")


class Discretization:
    """
    Everything the assembly routines need about the mesh: the mixed spaces, the
    Gauss rule, basis tabulations, quadrature points and weights, the wall DOFs,
    the element metric and the factorised alpha and continuity projections.

    Attributes:
        spaces (MixedSpaces): The spline spaces.
        rule (QuadratureRule): Gauss rule per element.
        tables (dict[str, BasisTable]): Tabulations keyed by "u_x", "u_y", "p", "phi".
        coords (numpy.ndarray): Quadrature point coordinates, shape (E, Q, 2).
        weights (numpy.ndarray): Quadrature weights, shape (E, Q).
        boundary (BoundaryDofs): No-penetration DOFs.
        metric (numpy.ndarray): Element metric tensor.
        pressure_weights (numpy.ndarray): Integral of every pressure basis function.
        alpha_projector (AlphaProjector): Factorised alpha projection.
        solenoidal_projector (SolenoidalProjector): Factorised continuity projection.
    """

    def __init__(self, spaces: MixedSpaces, quadrature_order: int = 3, eps_smooth: float = 1.0):
        self.spaces = spaces
        self.rule = gauss_rule(quadrature_order)
        pressure_table = tabulate(spaces.pressure, self.rule)
        self.tables = {
            "u_x": tabulate(spaces.v_x, self.rule),
            "u_y": tabulate(spaces.v_y, self.rule),
            "p": pressure_table,
            "phi": pressure_table if spaces.levelset is spaces.pressure else tabulate(spaces.levelset, self.rule),
        }
        self.coords, self.weights = quadrature_points(spaces.pressure, self.rule)
        self.boundary = boundary_normal_dofs(spaces)
        self.metric = metric_tensor(spaces.h_x, spaces.h_y)
        self.pressure_weights = pressure_table.scatter(
            np.einsum("eq,eqa->ea", self.weights, pressure_table.values)
        )
        self.alpha_projector = AlphaProjector(
            self.tables["phi"], self.weights, spaces.h_x, spaces.h_y, eps_smooth
        )
        self.solenoidal_projector = SolenoidalProjector(
            self.tables["u_x"], self.tables["u_y"], pressure_table, self.weights, self.boundary.u_x, self.boundary.u_y
        )

    @property
    def n_u_x(self) -> int:
        return self.spaces.v_x.dof_count

    @property
    def n_u_y(self) -> int:
        return self.spaces.v_y.dof_count

    @property
    def n_p(self) -> int:
        return self.spaces.pressure.dof_count

    @property
    def n_phi(self) -> int:
        return self.spaces.levelset.dof_count

    def block_layout(self, constraint_indices: Iterable[int] = ()) -> BlockLayout:
        """
        Block layout of the global system.

        Args:
            constraint_indices (Iterable[int]): Indices 0..2 of the active
                constraints; each adds one perturbation block.

        Returns:
            BlockLayout: u_x, u_y, p, phi, then phi_i for the active constraints.
        """
        perturbations = tuple(PERTURBATION_BLOCKS[i] for i in sorted(constraint_indices))
        names = FIELD_BLOCKS + perturbations
        sizes = (self.n_u_x, self.n_u_y, self.n_p, self.n_phi) + (self.n_phi,) * len(perturbations)
        return BlockLayout(names=names, sizes=sizes)

    def dirichlet_rows(self, layout: BlockLayout) -> np.ndarray:
        """Global rows of the no-penetration DOFs in the given layout."""
        return np.concatenate(
            [
                layout.offset("u_x") + self.boundary.u_x,
                layout.offset("u_y") + self.boundary.u_y,
            ]
        )

    def integrate(self, integrand: np.ndarray) -> float:
        """Integrates a quadrature-point array of shape (E, Q) over the domain."""
        return float(np.sum(self.weights * integrand))


def build_discretization(
    n_x: int,
    n_y: int,
    domain: Rectangle,
    degree: int = 1,
    quadrature_order: int = 3,
    eps_smooth: float = 1.0,
) -> Discretization:
    """
    Builds the mixed spaces on a uniform mesh and their discretization data.

    Args:
        n_x (int): Elements in x.
        n_y (int): Elements in y.
        domain (Rectangle): The computational domain.
        degree (int): Degree of the pressure space.
        quadrature_order (int): Gauss points per direction.
        eps_smooth (float): Smoothing parameter of the alpha projection.

    Returns:
        Discretization: The discretization.
    """
    spaces = build_mixed_spaces(n_x, n_y, domain, degree=degree)
    return Discretization(spaces, quadrature_order=quadrature_order, eps_smooth=eps_smooth)
