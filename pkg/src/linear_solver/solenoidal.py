import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse import hstack
from scipy.sparse.linalg import splu

from src.assembly.tabulation import BasisTable


class SolenoidalProjector:
    """
    Restores the discrete continuity equation (q, div(u^n + u^{n+1})) = 0 after an
    inexact Krylov update by the smallest Euclidean change of the interior velocity
    coefficients,

        u <- u - D^T (D D^T)^{-1} D (u^n + u),

    with D the divergence matrix restricted to the interior (non-wall) DOFs. Since
    the divergence of the velocity space lies in the pressure space, the midpoint
    velocity is then pointwise divergence-free.

    D D^T is singular only for the constant pressure, so the first pressure DOF is
    pinned and the reduced matrix is factorised once.

    Attributes:
        n_u_x (int): Number of u_x coefficients.
        interior (numpy.ndarray): Interior positions in the stacked (u_x, u_y) vector.
        divergence (scipy.sparse.csr_matrix): D on the interior DOFs.
    """

    def __init__(
        self,
        u_x_table: BasisTable,
        u_y_table: BasisTable,
        p_table: BasisTable,
        weights: np.ndarray,
        wall_u_x: np.ndarray,
        wall_u_y: np.ndarray,
    ):
        self.n_u_x = u_x_table.n_dofs
        n_u = u_x_table.n_dofs + u_y_table.n_dofs
        blocks = []
        for i, table in enumerate((u_x_table, u_y_table)):
            local = np.einsum("eq,eqa,eqb->eab", weights, p_table.values, table.gradients[..., i])
            rows, cols, vals = p_table.triplets(table, local)
            blocks.append(coo_matrix((vals, (rows, cols)), shape=(p_table.n_dofs, table.n_dofs)))
        mask = np.ones(n_u, dtype=bool)
        mask[wall_u_x] = False
        mask[self.n_u_x + np.asarray(wall_u_y)] = False
        self.interior = np.flatnonzero(mask)
        self.divergence = hstack(blocks).tocsr()[:, self.interior]
        normal = (self.divergence @ self.divergence.T).tocsc()
        self.lu = splu(normal[1:, 1:])

    def defect(self, u_x: np.ndarray, u_y: np.ndarray) -> np.ndarray:
        """Continuity rows (q, div u) of a velocity field, one per pressure DOF."""
        return self.divergence @ np.concatenate([u_x, u_y])[self.interior]

    def correct(self, u_x_n: np.ndarray, u_y_n: np.ndarray, u_x: np.ndarray, u_y: np.ndarray):
        """
        Projects u^{n+1} so that the midpoint velocity satisfies continuity exactly.

        Args:
            u_x_n, u_y_n (numpy.ndarray): Velocity coefficients at level n.
            u_x, u_y (numpy.ndarray): Velocity coefficients at level n+1.

        Returns:
            tuple[numpy.ndarray, numpy.ndarray]: Corrected (u_x, u_y) at level n+1.
        """
        residual = self.defect(u_x_n + u_x, u_y_n + u_y)
        y = np.zeros_like(residual)
        y[1:] = self.lu.solve(residual[1:])
        u = np.concatenate([u_x, u_y])
        u[self.interior] -= self.divergence.T @ y
        return u[: self.n_u_x], u[self.n_u_x :]
