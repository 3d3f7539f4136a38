from dataclasses import dataclass

import numpy as np

MAX_ORDER = 5


@dataclass(frozen=True)
class QuadratureRule:
    """
    A tensor-product Gauss-Legendre rule on the reference element [-1, 1]^2.

    The rule with `order` points per direction integrates polynomials of degree
    2 * order - 1 per direction exactly.

    Attributes:
        order (int): Points per direction.
        points_1d (numpy.ndarray): 1D abscissae in [-1, 1].
        weights_1d (numpy.ndarray): 1D weights, summing to 2.
    """

    order: int
    points_1d: np.ndarray
    weights_1d: np.ndarray

    @property
    def exactness(self) -> int:
        return 2 * self.order - 1

    @property
    def points(self) -> np.ndarray:
        """Points of shape (order**2, 2), the x index running fastest."""
        xi, eta = np.meshgrid(self.points_1d, self.points_1d)
        return np.column_stack([xi.ravel(), eta.ravel()])

    @property
    def weights(self) -> np.ndarray:
        """Weights of shape (order**2,), summing to the reference area 4."""
        return np.outer(self.weights_1d, self.weights_1d).ravel()


def gauss_rule(order: int) -> QuadratureRule:
    """
    Builds the tensor-product Gauss-Legendre rule with `order` points per direction.

    Args:
        order (int): Points per direction, 1 to 5.

    Returns:
        QuadratureRule: The rule.

    Raises:
        ValueError: For an unsupported order.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"unsupported quadrature order {order}, expected 1..{MAX_ORDER}")
    points, weights = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(order=order, points_1d=points, weights_1d=weights)
