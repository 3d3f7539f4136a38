import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from src.assembly.tabulation import BasisTable


class AlphaProjector:
    """
    Solves the smoothed projection of the parametric gradient norm,

        (eta, alpha) + eps (grad_xi eta, grad_xi alpha) = (eta, |grad_xi phi|),

    for the redistancing scale alpha. The parametric gradient of an element of
    size h_x by h_y is grad_xi = diag(h_x / 2, h_y / 2) grad_x.

    The system matrix depends on the mesh only, so it is factorised once.

    Attributes:
        table (BasisTable): Tabulation of the level-set (and alpha) space.
        weights (numpy.ndarray): Quadrature weights of shape (E, Q).
        scale (numpy.ndarray): The factors (h_x / 2, h_y / 2).
        eps_smooth (float): Smoothing parameter.
    """

    def __init__(self, table: BasisTable, weights: np.ndarray, h_x: float, h_y: float, eps_smooth: float):
        if eps_smooth < 0.0:
            raise ValueError(f"eps_smooth must be non-negative, got {eps_smooth}")
        self.table = table
        self.weights = weights
        self.scale = np.array([0.5 * h_x, 0.5 * h_y])
        self.eps_smooth = eps_smooth
        self.matrix = self._assemble()
        self.lu = splu(self.matrix.tocsc())

    def _assemble(self):
        t = self.table
        w = self.weights
        mass = np.einsum("eq,eqa,eqb->eab", w, t.values, t.values)
        sx, sy = self.scale**2
        stiffness = sx * np.einsum("eq,eqa,eqb->eab", w, t.grad_x, t.grad_x) + sy * np.einsum(
            "eq,eqa,eqb->eab", w, t.grad_y, t.grad_y
        )
        rows, cols, vals = t.triplets(t, mass + self.eps_smooth * stiffness)
        n = t.n_dofs
        return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    def load(self, phi: np.ndarray) -> np.ndarray:
        """Right-hand side (eta, |grad_xi phi|) for level-set coefficients phi."""
        grad = self.table.evaluate_gradient(phi) * self.scale
        norm = np.sqrt(np.sum(grad**2, axis=-1))
        return self.table.scatter(np.einsum("eq,eq,eqa->ea", self.weights, norm, self.table.values))

    def project(self, phi: np.ndarray) -> np.ndarray:
        """
        Computes the alpha coefficients of a level-set field.

        Args:
            phi (numpy.ndarray): Level-set coefficients.

        Returns:
            numpy.ndarray: Alpha coefficients on the same space.
        """
        return self.lu.solve(self.load(phi))


def solve_alpha_projection(table: BasisTable, weights, h_x: float, h_y: float, phi, eps_smooth: float) -> np.ndarray:
    """
    One-off alpha projection; repeated solves should keep an AlphaProjector.

    Args:
        table (BasisTable): Tabulation of the level-set space.
        weights (numpy.ndarray): Quadrature weights of shape (E, Q).
        h_x (float): Element width in meters.
        h_y (float): Element height in meters.
        phi (numpy.ndarray): Level-set coefficients.
        eps_smooth (float): Smoothing parameter.

    Returns:
        numpy.ndarray: Alpha coefficients.
    """
    return AlphaProjector(table, weights, h_x, h_y, eps_smooth).project(phi)
