from dataclasses import dataclass
from dataclasses import field

import numpy as np

from src.assembly.discretization import Discretization
from src.levelset_kernel.properties import FluidParams
from src.linear_solver.dense import dense_solve_3x3
from src.twofluid_forms.constraints import ConstraintProblem
from src.twofluid_forms.state import State
from src.utils.errors import ConstraintSolveError
from src.utils.errors import SingularSystemError
from src.utils.logging import log_lambda
from src.utils.logging import log_warning

MAX_ITERATIONS = 50
COND_LIMIT = 1e12
# rounding floor of each constraint sum, in units of machine epsilon times its magnitude
ROUNDOFF_FACTOR = 64.0


@dataclass
class LambdaSolve:
    """
    Result of the multiplier Newton iteration.

    Attributes:
        lambdas (numpy.ndarray): Multipliers, zero for inactive constraints.
        iterations (int): Newton updates performed.
        final_residual (numpy.ndarray): (h1, h2, h3) at the solution.
        active (tuple[int, ...]): Constraints still enforced.
        deactivated (tuple[int, ...]): Constraints dropped during this solve.
        tolerance (numpy.ndarray): Per-constraint bound each active |h_j| was held to.
    """

    lambdas: np.ndarray
    iterations: int
    final_residual: np.ndarray
    active: tuple[int, ...] = ()
    deactivated: tuple[int, ...] = field(default_factory=tuple)
    tolerance: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def active_residual_norm(self) -> float:
        return float(np.linalg.norm(self.final_residual[list(self.active)]))

    @property
    def converged(self) -> bool:
        active = list(self.active)
        return bool(np.all(np.abs(self.final_residual[active]) < self.tolerance[active]))


def constraint_tolerances(magnitudes: np.ndarray, eps2: float) -> np.ndarray:
    """
    Bound on each |h_j|: eps2, raised to the rounding level of the sum behind h_j.

    Each constraint is measured against its own magnitude, so a large energy
    rate never loosens the mass bound.
    """
    return np.maximum(eps2, ROUNDOFF_FACTOR * np.finfo(float).eps * np.abs(magnitudes))


def equilibrated(J: np.ndarray) -> np.ndarray | None:
    """
    The Jacobian scaled to a unit diagonal, D^-1/2 J D^-1/2 with D = |diag J|;
    None when a diagonal entry vanishes.

    Rescaling a constraint rescales its perturbation field by the same factor,
    so the scaled matrix does not depend on the units of h_j.
    """
    d = np.abs(np.diag(J))
    if not np.all(np.isfinite(d)) or np.any(d == 0.0):
        return None
    s = 1.0 / np.sqrt(d)
    return J * np.outer(s, s)


def deactivation_candidate(J: np.ndarray) -> int:
    """
    Position (within the active set) of the constraint to drop: a vanishing
    diagonal first, otherwise the row with the smallest pivot after eliminating
    the others, i.e. the largest diagonal entry of the inverse of the
    equilibrated Jacobian.
    """
    scaled = equilibrated(J)
    if scaled is None:
        return int(np.argmin(np.abs(np.diag(J))))
    try:
        return int(np.argmax(np.abs(np.diag(np.linalg.inv(scaled)))))
    except np.linalg.LinAlgError:
        return int(np.argmin(np.abs(np.diag(J))))


def condition_estimate(J: np.ndarray) -> float:
    scaled = equilibrated(J)
    return np.inf if scaled is None else float(np.linalg.cond(scaled))


def solve_lambda(
    disc: Discretization,
    state_n: State,
    iterate: State,
    dt: float,
    params: FluidParams,
    eps2: float,
    active=(0, 1, 2),
    max_iterations: int = MAX_ITERATIONS,
    cond_limit: float = COND_LIMIT,
    verbose: int = 0,
) -> LambdaSolve:
    """
    Newton iteration for the multipliers so that h_j(phi_0 + sum_i lambda_i phi_i) = 0
    for every active constraint j, starting from the iterate's multipliers.

    The velocity, phi_0, the perturbations and alpha stay fixed; the iterate is
    not modified. A Jacobian whose equilibrated condition number exceeds
    cond_limit (or a zero pivot) drops one active row for this solve, see
    deactivation_candidate.

    Args:
        disc (Discretization): The discretization.
        state_n (State): Accepted state at level n.
        iterate (State): Current iterate with updated perturbation fields.
        dt (float): Time-step size in seconds.
        params (FluidParams): Material data.
        eps2 (float): Absolute tolerance on every active |h_j|.
        active (Iterable[int]): Constraint indices to enforce.
        max_iterations (int): Newton iteration limit.
        cond_limit (float): Deactivation threshold of the condition number.
        verbose (int): Prints the outcome above 1.

    Returns:
        LambdaSolve: Multipliers and residuals.

    Raises:
        ValueError: If eps2 is not positive.
        ConstraintSolveError: If the iteration limit is reached.
    """
    if eps2 <= 0.0:
        raise ValueError(f"eps2 must be positive, got {eps2}")
    problem = ConstraintProblem(disc, state_n, iterate, dt, params)
    active = sorted(set(active))
    deactivated = []
    lambdas = np.zeros(3)
    lambdas[active] = iterate.lambdas[active]

    for iteration in range(max_iterations + 1):
        h = problem.values(lambdas)
        tolerance = constraint_tolerances(problem.magnitudes(lambdas), eps2)
        if np.all(np.abs(h[active]) < tolerance[active]):
            if verbose > 1:
                log_lambda(lambdas, h, iteration)
            return LambdaSolve(
                lambdas=lambdas,
                iterations=iteration,
                final_residual=h,
                active=tuple(active),
                deactivated=tuple(deactivated),
                tolerance=tolerance,
            )
        if iteration == max_iterations:
            break

        J = problem.jacobian(lambdas)[np.ix_(active, active)]
        try:
            cond = condition_estimate(J)
            if cond > cond_limit:
                raise SingularSystemError(f"condition number {cond:.3e} exceeds {cond_limit:.1e}")
            step = dense_solve_3x3(J, -h[active])
        except SingularSystemError as exc:
            dropped = active[deactivation_candidate(J)]
            active.remove(dropped)
            deactivated.append(dropped)
            lambdas[dropped] = 0.0
            if verbose > 0:
                log_warning(f"constraint {dropped + 1} deactivated: {exc}")
            continue
        lambdas[active] += step

    raise ConstraintSolveError(
        f"multiplier Newton did not converge in {max_iterations} iterations, |h| = {np.linalg.norm(h[active]):.3e}",
        lambdas=lambdas,
        residual=h,
    )
