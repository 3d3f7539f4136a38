from dataclasses import dataclass

import numpy as np

from src.spline_spaces.knot_vector import KnotVector
from src.spline_spaces.knot_vector import make_open_knot_vector


@dataclass(frozen=True)
class Rectangle:
    """
    An axis-aligned rectangle [x0, x1] x [y0, y1] in meters.
    """

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class SplineSpace:
    """
    A tensor-product B-spline space with lexicographic DOF numbering (x fastest).

    Attributes:
        kv_x (KnotVector): Knot vector in the x direction.
        kv_y (KnotVector): Knot vector in the y direction.
    """

    kv_x: KnotVector
    kv_y: KnotVector

    @property
    def n_x(self) -> int:
        return self.kv_x.n_basis

    @property
    def n_y(self) -> int:
        return self.kv_y.n_basis

    @property
    def dof_count(self) -> int:
        return self.n_x * self.n_y

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kv_x.degree, self.kv_y.degree

    def dof_index(self, i, j):
        """
        Maps the tensor index (i, j) to the global DOF index.

        Args:
            i (int | numpy.ndarray): Index of the x-direction basis function.
            j (int | numpy.ndarray): Index of the y-direction basis function.

        Returns:
            int | numpy.ndarray: The global index i + j * n_x.
        """
        return np.asarray(i) + np.asarray(j) * self.n_x

    def evaluate_grid(self, coeffs, xs, ys, derivative: str | None = None) -> np.ndarray:
        """
        Evaluates a field of this space on the tensor lattice xs x ys.

        Args:
            coeffs (array_like): Coefficient vector of length dof_count.
            xs (array_like): Lattice abscissae.
            ys (array_like): Lattice ordinates.
            derivative (str | None): None for values, "x" or "y" for a partial derivative.

        Returns:
            numpy.ndarray: Array of shape (len(ys), len(xs)).
        """
        bx = self.kv_x.collocation_matrix(xs, derivative=derivative == "x")
        by = self.kv_y.collocation_matrix(ys, derivative=derivative == "y")
        c = np.asarray(coeffs, dtype=float).reshape(self.n_y, self.n_x)
        return np.asarray(by @ (bx @ c.T).T)

    def interpolate_greville(self, fn) -> np.ndarray:
        """
        Builds coefficients by sampling fn at the Greville points.

        For degree 1 this is nodal interpolation.

        Args:
            fn (Callable): Vectorised function fn(x, y).

        Returns:
            numpy.ndarray: Coefficient vector.
        """
        gx, gy = np.meshgrid(self.kv_x.greville(), self.kv_y.greville())
        return np.asarray(fn(gx, gy), dtype=float).ravel()


@dataclass(frozen=True)
class MixedSpaces:
    """
    The divergence-conforming velocity pair, the pressure space and the level-set
    and alpha spaces on one uniform Cartesian mesh.

    Attributes:
        v_x (SplineSpace): x-velocity, one degree higher (and smoother) in x.
        v_y (SplineSpace): y-velocity, one degree higher (and smoother) in y.
        pressure (SplineSpace): Pressure space, contains the divergence of every velocity.
        levelset (SplineSpace): Level-set space.
        alpha (SplineSpace): Space of the redistancing scale alpha.
        n_x (int): Elements in x.
        n_y (int): Elements in y.
        domain (Rectangle): The computational domain.
    """

    v_x: SplineSpace
    v_y: SplineSpace
    pressure: SplineSpace
    levelset: SplineSpace
    alpha: SplineSpace
    n_x: int
    n_y: int
    domain: Rectangle

    @property
    def h_x(self) -> float:
        return self.domain.width / self.n_x

    @property
    def h_y(self) -> float:
        return self.domain.height / self.n_y

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y


@dataclass(frozen=True)
class BoundaryDofs:
    """
    Velocity DOFs whose basis functions carry the wall-normal component.

    Attributes:
        u_x (numpy.ndarray): Indices into v_x on the left and right walls.
        u_y (numpy.ndarray): Indices into v_y on the bottom and top walls.
    """

    u_x: np.ndarray
    u_y: np.ndarray

    def __len__(self) -> int:
        return len(self.u_x) + len(self.u_y)


def build_mixed_spaces(n_x: int, n_y: int, domain: Rectangle, degree: int = 1) -> MixedSpaces:
    """
    Builds the structure-preserving velocity/pressure spaces on a uniform mesh.

    With degree p the x-velocity has degree p+1 (C^p) in x and degree p (C^(p-1))
    in y, and symmetrically for the y-velocity. The pressure, level-set and alpha
    spaces have degree p with C^(p-1) continuity, so the divergence of any velocity
    lies in the pressure space.

    Args:
        n_x (int): Elements in x, at least 2.
        n_y (int): Elements in y, at least 2.
        domain (Rectangle): The computational domain.
        degree (int): Degree p of the pressure space.

    Returns:
        MixedSpaces: The spaces.
    """
    if n_x < 2 or n_y < 2:
        raise ValueError(f"at least 2x2 elements are required, got {n_x}x{n_y}")
    x_range = (domain.x0, domain.x1)
    y_range = (domain.y0, domain.y1)
    low_x = make_open_knot_vector(n_x, degree, x_range)
    low_y = make_open_knot_vector(n_y, degree, y_range)
    high_x = make_open_knot_vector(n_x, degree + 1, x_range)
    high_y = make_open_knot_vector(n_y, degree + 1, y_range)
    scalar = SplineSpace(low_x, low_y)
    return MixedSpaces(
        v_x=SplineSpace(high_x, low_y),
        v_y=SplineSpace(low_x, high_y),
        pressure=scalar,
        levelset=scalar,
        alpha=scalar,
        n_x=n_x,
        n_y=n_y,
        domain=domain,
    )


def boundary_normal_dofs(spaces: MixedSpaces) -> BoundaryDofs:
    """
    Collects the velocity DOFs that are nonzero on the wall they are normal to.

    With open knot vectors only the first and last index layers are nonzero on a
    wall, so constraining these to zero yields u.n = 0 on the whole boundary.

    Args:
        spaces (MixedSpaces): The spaces.

    Returns:
        BoundaryDofs: Sorted index arrays per velocity component.
    """
    vx, vy = spaces.v_x, spaces.v_y
    j = np.arange(vx.n_y)
    ux = np.concatenate([vx.dof_index(0, j), vx.dof_index(vx.n_x - 1, j)])
    i = np.arange(vy.n_x)
    uy = np.concatenate([vy.dof_index(i, 0), vy.dof_index(i, vy.n_y - 1)])
    return BoundaryDofs(u_x=np.sort(ux), u_y=np.sort(uy))
