from dataclasses import dataclass

import numpy as np

from src.assembly.assembler import apply_update
from src.assembly.assembler import assemble_jacobian
from src.assembly.assembler import assemble_residual
from src.assembly.assembler import layout_for
from src.assembly.discretization import Discretization
from src.assembly.sparse import BlockVector
from src.constraint_newton.lambda_solver import LambdaSolve
from src.constraint_newton.lambda_solver import solve_lambda
from src.levelset_kernel.properties import FluidParams
from src.linear_solver.krylov import KrylovConfig
from src.linear_solver.krylov import krylov_solve
from src.linear_solver.krylov import project_pressure_nullspace
from src.time_stepper.controller import StepControl
from src.twofluid_forms.state import FormKind
from src.twofluid_forms.state import State
from src.utils.errors import LinearSolverError
from src.utils.errors import NonlinearSolveError
from src.utils.logging import log_iteration
from src.utils.logging import log_warning


@dataclass
class StepReport:
    """
    An accepted time step.

    Attributes:
        state (State): The new state, perturbations folded into phi.
        dt (float): The time step actually taken in seconds.
        iterations (int): Global quasi-Newton iterations of the accepted attempt.
        krylov_iterations (int): GMRES iterations of the accepted attempt.
        lambdas (numpy.ndarray): Final multipliers.
        constraints (numpy.ndarray | None): (h1, h2, h3) after the last multiplier
            solve, None when no constraint is active.
        deactivated (tuple[int, ...]): Constraints the last multiplier solve dropped.
        retries (int): Failed attempts before this one.
        residual_norm (float): Final global residual norm.
        reference_norm (float): First residual norm of the accepted attempt.
    """

    state: State
    dt: float
    iterations: int
    krylov_iterations: int
    lambdas: np.ndarray
    constraints: np.ndarray | None
    deactivated: tuple[int, ...]
    retries: int
    residual_norm: float
    reference_norm: float


def _solve_multipliers(disc, state_n, iterate, dt, kind, params, ctrl, verbose) -> LambdaSolve:
    return solve_lambda(
        disc,
        state_n,
        iterate,
        dt,
        params,
        ctrl.eps2,
        active=kind.constraint_indices,
        cond_limit=ctrl.cond_limit,
        verbose=verbose,
    )


def _attempt(
    disc: Discretization,
    state_n: State,
    dt: float,
    kind: FormKind,
    params: FluidParams,
    ctrl: StepControl,
    krylov: KrylovConfig,
    verbose: int,
) -> StepReport:
    layout = layout_for(disc, kind)
    dirichlet = disc.dirichlet_rows(layout)
    iterate = state_n.copy()
    iterate.phi_pert[:] = 0.0
    iterate.lambdas[:] = 0.0
    reference = None
    multipliers = None
    krylov_iterations = 0

    for iteration in range(ctrl.max_global_iters + 1):
        residual = assemble_residual(disc, kind, state_n, iterate, dt, params)
        norm = residual.norm()
        if reference is None:
            reference = norm
        if norm == 0.0 or (iteration > 0 and norm < ctrl.eps1 * reference):
            break
        if iteration == ctrl.max_global_iters:
            raise NonlinearSolveError(
                f"no convergence in {ctrl.max_global_iters} iterations at t = {state_n.time:.6g} s, "
                f"dt = {dt:.3e} s: |R| / |R|ref = {norm / reference:.3e}"
            )

        jacobian = assemble_jacobian(
            disc, kind, state_n, iterate, dt, params, tau_linearization=ctrl.tau_linearization
        )
        result = krylov_solve(jacobian, -residual.values, krylov, verbose=verbose)
        krylov_iterations += result.iterations
        dx = result.x.copy()
        # identity rows: the wall increments are known exactly
        dx[dirichlet] = -residual.values[dirichlet]
        update = project_pressure_nullspace(BlockVector(dx, layout), disc.pressure_weights)
        iterate = apply_update(layout, iterate, update.values)
        iterate.u_x, iterate.u_y = disc.solenoidal_projector.correct(
            state_n.u_x, state_n.u_y, iterate.u_x, iterate.u_y
        )
        iterate.alpha = disc.alpha_projector.project(iterate.phi)

        # every constraint of the formulation starts active again at each iteration
        if kind.constraints:
            multipliers = _solve_multipliers(disc, state_n, iterate, dt, kind, params, ctrl, verbose)
            iterate.lambdas = multipliers.lambdas
        if verbose > 1:
            log_iteration(iteration, norm, norm / reference if reference else 0.0, result.iterations)

    if kind.constraints and multipliers is None:
        multipliers = _solve_multipliers(disc, state_n, iterate, dt, kind, params, ctrl, verbose)
        iterate.lambdas = multipliers.lambdas

    return StepReport(
        state=iterate.accepted(state_n.time + dt),
        dt=dt,
        iterations=iteration,
        krylov_iterations=krylov_iterations,
        lambdas=iterate.lambdas.copy(),
        constraints=None if multipliers is None else multipliers.final_residual,
        deactivated=() if multipliers is None else multipliers.deactivated,
        retries=0,
        residual_norm=norm,
        reference_norm=reference,
    )


def step(
    disc: Discretization,
    state_n: State,
    dt: float,
    kind: FormKind,
    params: FluidParams,
    ctrl: StepControl,
    krylov: KrylovConfig | None = None,
    verbose: int = 0,
) -> StepReport:
    """
    Advances the state by one Crank-Nicolson step with the quasi-Newton iteration:
    assemble the residual at the composed level set, solve the Jacobian system,
    update all fields, restore discrete continuity of the midpoint velocity,
    recompute alpha from phi_0, solve for the multipliers, and
    repeat until the residual norm drops below eps1 times its first value. The
    perturbations are then folded into the level set.

    A failed attempt is retried with half the time step, up to ctrl.max_retries times.

    Args:
        disc (Discretization): The discretization.
        state_n (State): Accepted state at level n.
        dt (float): Requested time step in seconds.
        kind (FormKind): The formulation.
        params (FluidParams): Material data.
        ctrl (StepControl): Tolerances and retry policy.
        krylov (KrylovConfig | None): Linear solver settings.
        verbose (int): 2 prints every iteration, 3 every Krylov iteration.

    Returns:
        StepReport: The accepted step.

    Raises:
        NonlinearSolveError: If every attempt fails in the nonlinear iteration.
        LinearSolverError: If the last attempt fails in the Krylov solve.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    krylov = krylov or KrylovConfig()
    attempt_dt = dt
    for retry in range(ctrl.max_retries + 1):
        try:
            report = _attempt(disc, state_n, attempt_dt, kind, params, ctrl, krylov, verbose)
            report.retries = retry
            return report
        except (NonlinearSolveError, LinearSolverError) as exc:
            failure = exc
            if retry == ctrl.max_retries or 0.5 * attempt_dt < ctrl.dt_min:
                break
            if verbose > 0:
                log_warning(f"step failed with dt = {attempt_dt:.3e} s ({exc}); retrying with dt / 2")
            attempt_dt *= 0.5
    raise failure
