from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

import numpy as np

from src.assembly.discretization import Discretization
from src.assembly.discretization import build_discretization
from src.diagnostics_io import energies
from src.diagnostics_io.config import RunConfig
from src.diagnostics_io.snapshot import write_snapshot
from src.diagnostics_io.trace import TraceRow
from src.diagnostics_io.trace import TraceWriter
from src.levelset_kernel.properties import FluidParams
from src.time_stepper.controller import compute_cfl
from src.time_stepper.controller import controller_dt
from src.time_stepper.stepper import StepReport
from src.time_stepper.stepper import step
from src.twofluid_forms.constraints import constraint_h
from src.twofluid_forms.state import FormKind
from src.twofluid_forms.state import State
from src.twofluid_forms.state import initial_dambreak_state
from src.utils.logging import custom_print
from src.utils.logging import custom_step_tracker

TIME_EPS = 1e-12


@dataclass
class SimulationResult:
    """
    Outcome of a run.

    Attributes:
        final_state (State): The last accepted state.
        trace (list[TraceRow]): One row for the initial state and one per step.
        snapshots (dict[float, Path]): Snapshot files by time.
        initial_energy (float): Total energy E_kin + E_pot of the initial state.
    """

    final_state: State
    trace: list[TraceRow]
    snapshots: dict[float, Path] = field(default_factory=dict)
    initial_energy: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([row.t_s for row in self.trace])

    @property
    def total_energy(self) -> np.ndarray:
        return np.array([row.total_energy for row in self.trace])


def initial_row(disc: Discretization, state: State, params: FluidParams) -> TraceRow:
    l1, l2, linf = energies.divergence_norms(disc, state)
    return TraceRow(
        step=0,
        t_s=state.time,
        dt_s=0.0,
        E_kin_J_per_m=energies.energy_kinetic(disc, state, params),
        E_pot_J_per_m=energies.energy_potential(disc, state, params),
        dissipation_W_per_m=0.0,
        mass_kg_per_m=energies.total_mass(disc, state, params),
        dEkin_actual_W_per_m=0.0,
        dEkin_weak_W_per_m=0.0,
        dEpot_actual_W_per_m=0.0,
        dEpot_weak_W_per_m=0.0,
        div_L1=l1,
        div_L2=l2,
        div_Linf=linf,
        h1_kg_per_m=0.0,
        h2_W_per_m=0.0,
        h3_W_per_m=0.0,
        lambda1=0.0,
        lambda2=0.0,
        lambda3=0.0,
        global_iterations=0,
        krylov_iterations=0,
    )


def step_row(
    disc: Discretization,
    kind: FormKind,
    state_n: State,
    report: StepReport,
    params: FluidParams,
    index: int,
) -> TraceRow:
    """
    Diagnostics of an accepted step.

    Args:
        disc (Discretization): The discretization.
        kind (FormKind): The formulation.
        state_n (State): State before the step.
        report (StepReport): The accepted step.
        params (FluidParams): Material data.
        index (int): Step number, starting at 1.

    Returns:
        TraceRow: The row.
    """
    state, dt = report.state, report.dt
    kin_actual, pot_actual = energies.energy_rates_actual(disc, state_n, state, dt, params)
    kin_weak, pot_weak = energies.energy_rates_weakform(disc, state_n, state, dt, params, kind)
    l1, l2, linf = energies.divergence_norms(disc, state, state_n)
    h = constraint_h(disc, state_n, state, dt, params).as_array()
    return TraceRow(
        step=index,
        t_s=state.time,
        dt_s=dt,
        E_kin_J_per_m=energies.energy_kinetic(disc, state, params),
        E_pot_J_per_m=energies.energy_potential(disc, state, params),
        dissipation_W_per_m=energies.dissipation(disc, state_n, state, dt, params),
        mass_kg_per_m=energies.total_mass(disc, state, params),
        dEkin_actual_W_per_m=kin_actual,
        dEkin_weak_W_per_m=kin_weak,
        dEpot_actual_W_per_m=pot_actual,
        dEpot_weak_W_per_m=pot_weak,
        div_L1=l1,
        div_L2=l2,
        div_Linf=linf,
        h1_kg_per_m=float(h[0]),
        h2_W_per_m=float(h[1]),
        h3_W_per_m=float(h[2]),
        lambda1=float(report.lambdas[0]),
        lambda2=float(report.lambdas[1]),
        lambda3=float(report.lambdas[2]),
        global_iterations=report.iterations,
        krylov_iterations=report.krylov_iterations,
    )


def _next_target(time: float, targets: list[float]) -> float:
    return next(t for t in targets if t > time + TIME_EPS)


def run_simulation(config: RunConfig, verbose: int = 0, initial_state: State | None = None) -> SimulationResult:
    """
    Runs the time loop: CFL measurement, controller time step, Crank-Nicolson step,
    diagnostics, snapshots. The time step is shortened to land on snapshot times
    and on the end time.

    The trace is written to <output_dir>/trace.csv row by row, so it is complete
    up to the last accepted step even when a step aborts.

    Args:
        config (RunConfig): The run description.
        verbose (int): 0 silent, 1 per step, 2 per iteration, 3 per Krylov iteration.
        initial_state (State | None): Start state; the dambreak column when omitted.

    Returns:
        SimulationResult: Final state, trace and snapshot files.

    Raises:
        NonlinearSolveError: If a step fails after all retries.
        LinearSolverError: If the last retry of a step fails in the Krylov solve.
    """
    kind = config.form_kind()
    params = config.fluid_params()
    ctrl = config.step_control()
    krylov = config.krylov_config()
    disc = build_discretization(
        config.n_x,
        config.n_y,
        config.domain,
        degree=config.degree,
        quadrature_order=config.quadrature_order,
        eps_smooth=config.eps_smooth,
    )
    out = Path(config.output_dir)
    if verbose > 0:
        custom_print(
            f"{kind.name} formulation, {config.n_x}x{config.n_y} mesh, "
            f"constraints: {', '.join(c.value for c in kind.constraints) or 'none'}"
        )

    state = initial_state if initial_state is not None else initial_dambreak_state(disc, config.column)
    targets = sorted({t for t in config.snapshot_times if t <= config.end_time} | {config.end_time})
    snapshots = {}
    if any(abs(t - state.time) <= TIME_EPS for t in config.snapshot_times):
        snapshots[state.time] = write_snapshot(
            disc, state, params, out / f"snapshot_{state.time:.4f}.txt", config.snapshot_resolution
        )

    with TraceWriter(out / "trace.csv") as writer:
        writer.append(initial_row(disc, state, params))
        result = SimulationResult(
            final_state=state,
            trace=writer.rows,
            snapshots=snapshots,
            initial_energy=writer.rows[0].total_energy,
        )
        dt = ctrl.dt_init
        index = 0
        while state.time < config.end_time - TIME_EPS:
            target = _next_target(state.time, targets)
            proposed = dt
            dt = min(proposed, target - state.time)
            if verbose > 0:
                custom_step_tracker(index, state.time, dt)
            report = step(disc, state, dt, kind, params, ctrl, krylov, verbose=verbose)
            index += 1
            writer.append(step_row(disc, kind, state, report, params, index))
            state = report.state
            result.final_state = state
            if abs(state.time - target) <= TIME_EPS and target in config.snapshot_times:
                snapshots[target] = write_snapshot(
                    disc, state, params, out / f"snapshot_{target:.4f}.txt", config.snapshot_resolution
                )
            # a step shortened only to land on a target does not slow the controller down
            base = proposed if report.retries == 0 else report.dt
            dt = controller_dt(base, compute_cfl(disc, state, base), ctrl)
    return result
