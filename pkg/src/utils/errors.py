class TwoFluidError(Exception):
    """Base class of all solver errors."""


class ConfigError(TwoFluidError):
    """Raised for unknown, missing or malformed configuration entries."""


class NonlinearSolveError(TwoFluidError):
    """Raised when the global quasi-Newton iteration does not converge."""


class NonFiniteError(NonlinearSolveError):
    """
    Raised when a NaN or infinity shows up at a quadrature point.

    Attributes:
        element (int): Index of the offending element.
        point (int): Index of the quadrature point inside the element.
        field (str): Name of the field holding the non-finite value.
    """

    def __init__(self, field: str, element: int, point: int, coordinates: tuple[float, float]):
        super().__init__(
            f"non-finite value of '{field}' in element {element}, quadrature point {point} "
            f"at x = ({coordinates[0]:.6g}, {coordinates[1]:.6g})"
        )
        self.field = field
        self.element = element
        self.point = point
        self.coordinates = coordinates


class ConstraintSolveError(NonlinearSolveError):
    """
    Raised when the nested Lagrange-multiplier Newton iteration fails.

    Attributes:
        lambdas (numpy.ndarray): The last multiplier iterate.
        residual (numpy.ndarray): The constraint values at that iterate.
    """

    def __init__(self, message: str, lambdas, residual):
        super().__init__(message)
        self.lambdas = lambdas
        self.residual = residual


class SingularSystemError(TwoFluidError):
    """Raised by the dense direct solver on an exactly zero pivot."""


class LinearSolverError(TwoFluidError):
    """
    Raised when the Krylov solver does not reach its tolerance.

    Attributes:
        x (numpy.ndarray): The best iterate found.
        residual_norm (float): The true residual norm of that iterate.
        iterations (int): Krylov iterations spent.
    """

    def __init__(self, message: str, x, residual_norm: float, iterations: int):
        super().__init__(message)
        self.x = x
        self.residual_norm = residual_norm
        self.iterations = iterations
