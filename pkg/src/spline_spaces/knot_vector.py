from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix


@dataclass(frozen=True)
class KnotVector:
    """
    An open knot vector in one coordinate direction.

    Attributes:
        breakpoints (tuple[float, ...]): Strictly increasing distinct breakpoints in meters.
        degree (int): Polynomial degree of the B-splines, at least 1.
        multiplicities (tuple[int, ...]): Multiplicity of every interior breakpoint.
    """

    breakpoints: tuple[float, ...]
    degree: int
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if len(self.breakpoints) < 2:
            raise ValueError("a knot vector needs at least two breakpoints")
        if np.any(np.diff(self.breakpoints) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.multiplicities) != len(self.breakpoints) - 2:
            raise ValueError("one multiplicity per interior breakpoint is required")
        for m in self.multiplicities:
            if not 1 <= m <= self.degree:
                raise ValueError(
                    f"interior multiplicity {m} outside [1, {self.degree}] breaks H1 conformity"
                )

    @cached_property
    def knots(self) -> np.ndarray:
        p = self.degree
        interior = [
            x for x, m in zip(self.breakpoints[1:-1], self.multiplicities) for _ in range(m)
        ]
        return np.array(
            [self.breakpoints[0]] * (p + 1) + interior + [self.breakpoints[-1]] * (p + 1),
            dtype=float,
        )

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def n_elems(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def interval(self) -> tuple[float, float]:
        return self.breakpoints[0], self.breakpoints[-1]

    def find_span(self, x: float) -> int:
        """
        Finds the knot span index i with knots[i] <= x < knots[i+1].

        The right end of the domain is assigned to the last non-empty span.

        Args:
            x (float): Location inside the knot interval.

        Returns:
            int: The span index; the active basis functions are [i - degree, i].

        Raises:
            ValueError: If x lies outside the knot interval.
        """
        a, b = self.interval
        if not a <= x <= b:
            raise ValueError(f"x = {x} outside the knot interval [{a}, {b}]")
        n = self.n_basis
        if x == b:
            return n - 1
        span = int(np.searchsorted(self.knots, x, side="right")) - 1
        return min(max(span, self.degree), n - 1)

    def greville(self) -> np.ndarray:
        """
        Computes the Greville abscissae, the averages of degree consecutive knots.

        Returns:
            numpy.ndarray: One abscissa per basis function.
        """
        p = self.degree
        t = self.knots
        return np.array([t[i + 1:i + p + 1].mean() for i in range(self.n_basis)])

    def collocation_matrix(self, points, derivative: bool = False) -> csr_matrix:
        """
        Builds the sparse matrix C[k, j] = B_j(x_k) (or B_j'(x_k)).

        Args:
            points (array_like): Evaluation points inside the knot interval.
            derivative (bool): Collocate first derivatives instead of values.

        Returns:
            csr_matrix: A (len(points), n_basis) matrix.
        """
        points = np.atleast_1d(np.asarray(points, dtype=float))
        p = self.degree
        rows = np.repeat(np.arange(points.size), p + 1)
        cols = np.empty(points.size * (p + 1), dtype=int)
        vals = np.empty(points.size * (p + 1))
        for k, x in enumerate(points):
            first, values, derivatives = eval_basis_1d(self, x)
            cols[k * (p + 1):(k + 1) * (p + 1)] = first + np.arange(p + 1)
            vals[k * (p + 1):(k + 1) * (p + 1)] = derivatives if derivative else values
        return csr_matrix((vals, (rows, cols)), shape=(points.size, self.n_basis))


def make_open_knot_vector(
    n_elems: int,
    degree: int,
    interval: tuple[float, float],
    interior_multiplicity: int = 1,
) -> KnotVector:
    """
    Builds an open knot vector with uniform spans.

    Args:
        n_elems (int): Number of knot spans (elements), at least 1.
        degree (int): Polynomial degree.
        interval (tuple[float, float]): Coordinate range covered by the knot vector.
        interior_multiplicity (int): Multiplicity of every interior breakpoint; the
            continuity across breakpoints is C^(degree - multiplicity).

    Returns:
        KnotVector: The knot vector.

    Raises:
        ValueError: On fewer than one element, a degenerate interval or a multiplicity
            outside [1, degree].
    """
    if n_elems < 1:
        raise ValueError(f"n_elems must be >= 1, got {n_elems}")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError(f"degenerate interval ({a}, {b})")
    breakpoints = tuple(float(x) for x in np.linspace(a, b, n_elems + 1))
    return KnotVector(
        breakpoints=breakpoints,
        degree=degree,
        multiplicities=(interior_multiplicity,) * (n_elems - 1),
    )


def _basis_values(knots: np.ndarray, degree: int, span: int, x: float) -> np.ndarray:
    # Cox-de Boor triangle, returns N_{span-degree..span, degree}(x)
    values = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    values[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            temp = values[r] / (right[r + 1] + left[j - r])
            values[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        values[j] = saved
    return values


def eval_basis_1d(kv: KnotVector, x: float) -> tuple[int, np.ndarray, np.ndarray]:
    """
    Evaluates the degree+1 active B-splines and their first derivatives at x.

    Args:
        kv (KnotVector): The knot vector.
        x (float): Location inside the knot interval.

    Returns:
        tuple: (first_active_index, values, derivatives) where values[r] and
        derivatives[r] belong to basis function first_active_index + r.

    Raises:
        ValueError: If x lies outside the knot interval.
    """
    p = kv.degree
    t = kv.knots
    span = kv.find_span(float(x))
    values = _basis_values(t, p, span, float(x))

    # N'_{i,p} = p N_{i,p-1}/(t_{i+p}-t_i) - p N_{i+1,p-1}/(t_{i+p+1}-t_{i+1})
    lower = np.zeros(p + 2)
    lower[1:p + 1] = _basis_values(t, p - 1, span, float(x))
    derivatives = np.zeros(p + 1)
    for r in range(p + 1):
        i = span - p + r
        d_left = t[i + p] - t[i]
        d_right = t[i + p + 1] - t[i + 1]
        if d_left > 0.0:
            derivatives[r] += p * lower[r] / d_left
        if d_right > 0.0:
            derivatives[r] -= p * lower[r + 1] / d_right
    return span - p, values, derivatives
