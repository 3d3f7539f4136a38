from dataclasses import dataclass

import numpy as np

from src.assembly.discretization import Discretization
from src.levelset_kernel.supg import velocity_metric_norm
from src.twofluid_forms.state import State


@dataclass(frozen=True)
class StepControl:
    """
    Time-step control and nonlinear tolerances.

    Attributes:
        cfl_target (float): Target CFL number.
        kp (float): Exponent of the proportional controller.
        dt_init (float): First time step in seconds.
        dt_min (float): Smallest time step in seconds.
        dt_max (float): Largest time step in seconds.
        eps1 (float): Relative reduction of the global residual norm.
        eps2 (float): Absolute tolerance of the constraints.
        max_global_iters (int): Quasi-Newton iterations per attempt.
        max_retries (int): Halvings of dt after a failed attempt.
        dt_growth_limit (float | None): Cap on dt_{n+1} / dt_n, None for no cap.
        tau_linearization (str): "frozen" or "exact".
        cond_limit (float): Deactivation threshold of the multiplier Jacobian.
    """

    cfl_target: float = 0.75
    kp: float = 0.75
    dt_init: float = 1e-3
    dt_min: float = 1e-6
    dt_max: float = 0.05
    eps1: float = 1e-3
    eps2: float = 1e-12
    max_global_iters: int = 30
    max_retries: int = 3
    dt_growth_limit: float | None = None
    tau_linearization: str = "frozen"
    cond_limit: float = 1e12

    def __post_init__(self):
        if self.cfl_target <= 0.0:
            raise ValueError(f"cfl_target must be positive, got {self.cfl_target}")
        if not 0.0 < self.kp <= 1.0:
            raise ValueError(f"kp must lie in (0, 1], got {self.kp}")
        if not 0.0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError(
                f"expected 0 < dt_min <= dt_init <= dt_max, got {self.dt_min}, {self.dt_init}, {self.dt_max}"
            )
        if self.eps1 <= 0.0 or self.eps2 <= 0.0:
            raise ValueError("eps1 and eps2 must be positive")
        if self.max_global_iters < 1 or self.max_retries < 0:
            raise ValueError("max_global_iters must be positive and max_retries non-negative")
        if self.dt_growth_limit is not None and self.dt_growth_limit <= 1.0:
            raise ValueError(f"dt_growth_limit must exceed 1, got {self.dt_growth_limit}")


def compute_cfl(disc: Discretization, state: State, dt: float) -> float:
    """
    CFL number dt * max sqrt(u . G u) over all quadrature points.

    Args:
        disc (Discretization): The discretization.
        state (State): The state whose velocity is measured.
        dt (float): Time-step size in seconds.

    Returns:
        float: The CFL number.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    u = np.stack([disc.tables["u_x"].evaluate(state.u_x), disc.tables["u_y"].evaluate(state.u_y)], axis=-1)
    return float(dt * np.sqrt(np.max(velocity_metric_norm(u, disc.metric))))


def controller_dt(dt_n: float, cfl_n: float, ctrl: StepControl) -> float:
    """
    Proportional controller dt_{n+1} = (cfl_target / cfl_n)^kp * dt_n, clamped to
    [dt_min, dt_max]; a vanishing CFL number gives dt_max.

    Args:
        dt_n (float): Last time step in seconds.
        cfl_n (float): CFL number of the last step.
        ctrl (StepControl): Controller settings.

    Returns:
        float: The next time step in seconds.
    """
    if dt_n <= 0.0:
        raise ValueError(f"dt_n must be positive, got {dt_n}")
    if cfl_n <= 0.0:
        dt = ctrl.dt_max
    else:
        dt = (ctrl.cfl_target / cfl_n) ** ctrl.kp * dt_n
    if ctrl.dt_growth_limit is not None:
        dt = min(dt, ctrl.dt_growth_limit * dt_n)
    return float(np.clip(dt, ctrl.dt_min, ctrl.dt_max))
