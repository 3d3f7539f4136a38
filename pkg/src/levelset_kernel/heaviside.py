import numpy as np


def smoothed_heaviside(phi_alpha):
    """
    Smoothed Heaviside of the rescaled level set phi / alpha.

    Returns 0 below -1, 1 above +1 and 0.5 * (1 + sin(pi x / 2)) in between,
    which is C^1 across both branch points.

    Args:
        phi_alpha (float | numpy.ndarray): The rescaled level set.

    Returns:
        float | numpy.ndarray: Blend weight in [0, 1].
    """
    x = np.clip(phi_alpha, -1.0, 1.0)
    return 0.5 * (1.0 + np.sin(0.5 * np.pi * x))


def smoothed_dirac(phi_alpha):
    """
    Derivative of smoothed_heaviside with respect to its argument.

    Args:
        phi_alpha (float | numpy.ndarray): The rescaled level set.

    Returns:
        float | numpy.ndarray: (pi / 4) cos(pi x / 2) inside [-1, 1], else 0.
    """
    x = np.asarray(phi_alpha, dtype=float)
    inside = np.abs(x) <= 1.0
    value = np.where(inside, 0.25 * np.pi * np.cos(0.5 * np.pi * np.clip(x, -1.0, 1.0)), 0.0)
    return value if value.ndim else float(value)
