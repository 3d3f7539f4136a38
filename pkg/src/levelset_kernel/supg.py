import numpy as np


def metric_tensor(h_x: float, h_y: float) -> np.ndarray:
    """
    Metric tensor G = (dxi/dx)^T (dxi/dx) of an axis-aligned element mapped
    from the reference square [-1, 1]^2.

    Args:
        h_x (float): Element width in meters.
        h_y (float): Element height in meters.

    Returns:
        numpy.ndarray: The 2x2 tensor diag((2/h_x)^2, (2/h_y)^2).
    """
    if h_x <= 0.0 or h_y <= 0.0:
        raise ValueError(f"element sizes must be positive, got {h_x}, {h_y}")
    return np.diag([(2.0 / h_x) ** 2, (2.0 / h_y) ** 2])


def velocity_metric_norm(u, G: np.ndarray):
    """Returns u . G u for velocities of shape (..., 2)."""
    u = np.asarray(u, dtype=float)
    return np.einsum("...i,ij,...j->...", u, G, u)


def supg_tau(u_mid, G: np.ndarray, dt: float):
    """
    SUPG parameter tau = (4 / dt^2 + u . G u)^(-1/2).

    Args:
        u_mid (numpy.ndarray): Midpoint velocity, shape (..., 2).
        G (numpy.ndarray): Element metric tensor.
        dt (float): Time-step size in seconds.

    Returns:
        float | numpy.ndarray: tau in seconds, one value per velocity.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return 1.0 / np.sqrt(4.0 / dt**2 + velocity_metric_norm(u_mid, G))
