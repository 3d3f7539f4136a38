from colorama import Fore
from colorama import Style


def custom_print(message: str) -> None:
    """
    Displays a fancy banner message.

    Args:
        message (str): The message to display.
    """
    print(Style.BRIGHT + Fore.CYAN + f"\n{'=' * 60}")
    print(Fore.MAGENTA + f"{message}")
    print(Style.BRIGHT + Fore.CYAN + f"{'=' * 60}" + Style.RESET_ALL)


def custom_step_tracker(step: int, time: float, dt: float) -> None:
    """
    Displays a step tracker line for each accepted time step of the time loop.

    Args:
        step (int): The index of the time step, starting at zero.
        time (float): The simulation time at the start of the step in seconds.
        dt (float): The time-step size in seconds.
    """
    print(
        Style.BRIGHT
        + Fore.CYAN
        + f"STEP {step + 1:5d}  t = {time:.6f} s  dt = {dt:.3e} s"
        + Style.RESET_ALL
    )


def log_iteration(iteration: int, norm: float, ratio: float, krylov_iterations: int) -> None:
    """
    Displays the state of one global (quasi-Newton) iteration.

    Args:
        iteration (int): The iteration index within the step.
        norm (float): The global residual norm.
        ratio (float): The norm relative to the reference norm of the step.
        krylov_iterations (int): Krylov iterations spent in the linear solve.
    """
    print(
        Fore.GREEN
        + f"  iter {iteration:2d}  |R| = {norm:.4e}  |R|/|R|ref = {ratio:.3e}"
        + f"  krylov = {krylov_iterations}"
        + Style.RESET_ALL
    )


def log_lambda(lambdas, residual, iterations: int) -> None:
    """
    Displays the outcome of a nested constraint solve.

    Args:
        lambdas (array_like): The Lagrange multipliers.
        residual (array_like): The constraint values at the solution.
        iterations (int): Newton iterations used.
    """
    lam = ", ".join(f"{value:+.4e}" for value in lambdas)
    res = ", ".join(f"{value:+.2e}" for value in residual)
    print(Fore.BLUE + f"    lambda = ({lam})  h = ({res})  its = {iterations}" + Style.RESET_ALL)


def log_warning(message: str) -> None:
    """
    Displays a warning line.

    Args:
        message (str): The warning to display.
    """
    print(Fore.RED + f"WARNING: {message}" + Style.RESET_ALL)
