from dataclasses import dataclass

import numpy as np

from src.assembly.quadrature import QuadratureRule
from src.spline_spaces.knot_vector import KnotVector
from src.spline_spaces.knot_vector import eval_basis_1d
from src.spline_spaces.spaces import SplineSpace


def _tabulate_1d(kv: KnotVector, rule: QuadratureRule):
    # per element: first active index, values and derivatives at the Gauss points
    p = kv.degree
    bp = np.asarray(kv.breakpoints)
    n_el = kv.n_elems
    first = np.empty(n_el, dtype=int)
    values = np.empty((n_el, rule.order, p + 1))
    derivatives = np.empty((n_el, rule.order, p + 1))
    points = np.empty((n_el, rule.order))
    for e in range(n_el):
        half = 0.5 * (bp[e + 1] - bp[e])
        points[e] = bp[e] + half * (rule.points_1d + 1.0)
        for g, x in enumerate(points[e]):
            first_active, values[e, g], derivatives[e, g] = eval_basis_1d(kv, x)
            if g == 0:
                first[e] = first_active
            elif first_active != first[e]:
                raise ValueError(f"Gauss points of element {e} straddle a knot span")
    return first, values, derivatives, points


@dataclass(frozen=True)
class BasisTable:
    """
    Basis functions of one space tabulated at every quadrature point of every element.

    Element e = e_x + e_y * n_x, point q = g_x + g_y * order, local function
    a = a_x + a_y * (p_x + 1).

    Attributes:
        dofs (numpy.ndarray): Global DOF of every local function, shape (E, nloc).
        values (numpy.ndarray): Basis values, shape (E, Q, nloc).
        grad_x (numpy.ndarray): x-derivatives, shape (E, Q, nloc).
        grad_y (numpy.ndarray): y-derivatives, shape (E, Q, nloc).
        n_dofs (int): Dimension of the space.
    """

    dofs: np.ndarray
    values: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    n_dofs: int

    @property
    def gradients(self) -> np.ndarray:
        """Basis gradients of shape (E, Q, nloc, 2)."""
        return np.stack([self.grad_x, self.grad_y], axis=-1)

    def evaluate(self, coeffs: np.ndarray) -> np.ndarray:
        """Field values at the quadrature points, shape (E, Q)."""
        local = np.asarray(coeffs, dtype=float)[self.dofs]
        return np.einsum("eqa,ea->eq", self.values, local)

    def evaluate_gradient(self, coeffs: np.ndarray) -> np.ndarray:
        """Field gradients at the quadrature points, shape (E, Q, 2)."""
        local = np.asarray(coeffs, dtype=float)[self.dofs]
        return np.stack(
            [
                np.einsum("eqa,ea->eq", self.grad_x, local),
                np.einsum("eqa,ea->eq", self.grad_y, local),
            ],
            axis=-1,
        )

    def scatter(self, local: np.ndarray) -> np.ndarray:
        """
        Sums element contributions of shape (E, nloc) into a global vector.

        The summation order is fixed by the element and local numbering.

        Args:
            local (numpy.ndarray): Element vectors.

        Returns:
            numpy.ndarray: Vector of length n_dofs.
        """
        return np.bincount(self.dofs.ravel(), weights=local.ravel(), minlength=self.n_dofs)

    def triplets(self, trial: "BasisTable", local: np.ndarray):
        """
        Flattens element matrices of shape (E, nloc_test, nloc_trial) to COO triplets.

        Args:
            trial (BasisTable): Table of the trial space (columns).
            local (numpy.ndarray): Element matrices, rows from this table.

        Returns:
            tuple: (rows, cols, vals) in element-major order.
        """
        n_el, n_test, n_trial = local.shape
        rows = np.broadcast_to(self.dofs[:, :, None], (n_el, n_test, n_trial))
        cols = np.broadcast_to(trial.dofs[:, None, :], (n_el, n_test, n_trial))
        return rows.ravel(), cols.ravel(), local.ravel()


def tabulate(space: SplineSpace, rule: QuadratureRule) -> BasisTable:
    """
    Tabulates a tensor-product space on the Gauss points of its elements.

    Args:
        space (SplineSpace): The space.
        rule (QuadratureRule): Gauss rule on the reference element.

    Returns:
        BasisTable: The tabulation.
    """
    fx, vx, dx, _ = _tabulate_1d(space.kv_x, rule)
    fy, vy, dy, _ = _tabulate_1d(space.kv_y, rule)
    n_ex, n_ey = space.kv_x.n_elems, space.kv_y.n_elems
    n_elems = n_ex * n_ey
    n_q = rule.order ** 2
    n_loc = vx.shape[2] * vy.shape[2]

    # axes (e_y, e_x, g_y, g_x, a_y, a_x)
    def outer(tab_y, tab_x):
        product = tab_y[:, None, :, None, :, None] * tab_x[None, :, None, :, None, :]
        return product.reshape(n_elems, n_q, n_loc)

    ix = fx[None, :, None, None] + np.arange(vx.shape[2])[None, None, None, :]
    iy = fy[:, None, None, None] + np.arange(vy.shape[2])[None, None, :, None]
    dofs = space.dof_index(ix, iy).reshape(n_elems, n_loc)

    return BasisTable(
        dofs=dofs,
        values=outer(vy, vx),
        grad_x=outer(vy, dx),
        grad_y=outer(dy, vx),
        n_dofs=space.dof_count,
    )


def quadrature_points(space: SplineSpace, rule: QuadratureRule):
    """
    Physical coordinates and weights of the quadrature points of a space's mesh.

    Args:
        space (SplineSpace): Any space on the mesh.
        rule (QuadratureRule): Gauss rule on the reference element.

    Returns:
        tuple: (coords of shape (E, Q, 2), weights of shape (E, Q)) with the
        reference-to-physical Jacobian folded into the weights.
    """
    _, _, _, px = _tabulate_1d(space.kv_x, rule)
    _, _, _, py = _tabulate_1d(space.kv_y, rule)
    n_ex, n_ey = space.kv_x.n_elems, space.kv_y.n_elems
    n_q = rule.order ** 2
    xs = np.broadcast_to(px[None, :, None, :], (n_ey, n_ex, rule.order, rule.order))
    ys = np.broadcast_to(py[:, None, :, None], (n_ey, n_ex, rule.order, rule.order))
    coords = np.stack([xs, ys], axis=-1).reshape(n_ex * n_ey, n_q, 2)

    hx = np.diff(space.kv_x.breakpoints)
    hy = np.diff(space.kv_y.breakpoints)
    jac = (hy[:, None] * hx[None, :] / 4.0).reshape(-1)
    weights = jac[:, None] * rule.weights[None, :]
    return coords, weights
