import numpy as np
from scipy.linalg import lu_factor
from scipy.linalg import lu_solve

from src.utils.errors import SingularSystemError


def dense_solve_3x3(J, r) -> np.ndarray:
    """
    Solves the small constraint system J x = r by LU with partial pivoting.

    Works for any size up to 3, the active constraints only.

    Args:
        J (array_like): Square matrix.
        r (array_like): Right-hand side.

    Returns:
        numpy.ndarray: The solution.

    Raises:
        ValueError: On mismatching shapes.
        SingularSystemError: On an exactly zero pivot.
    """
    J = np.array(J, dtype=float, ndmin=2)
    r = np.array(r, dtype=float, ndmin=1)
    if J.shape[0] != J.shape[1] or J.shape[0] != r.shape[0]:
        raise ValueError(f"cannot solve a {J.shape} system with a right-hand side of shape {r.shape}")
    if not np.all(np.isfinite(J)):
        raise SingularSystemError("constraint Jacobian contains non-finite entries")
    if J.shape[0] == 0:
        return np.zeros(0)
    lu, piv = lu_factor(J, check_finite=False)
    if np.any(np.diag(lu) == 0.0):
        raise SingularSystemError(f"zero pivot in the constraint Jacobian\n{J}")
    return lu_solve((lu, piv), r, check_finite=False)
