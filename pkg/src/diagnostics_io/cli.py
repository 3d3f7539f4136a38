import argparse
import os
import re
from dataclasses import replace

from colorama import Fore
from colorama import init
from dotenv import load_dotenv

from src.diagnostics_io.config import RunConfig
from src.diagnostics_io.config import parse_config
from src.time_stepper.simulation import run_simulation
from src.twofluid_forms.state import Formulation
from src.utils.errors import ConfigError
from src.utils.errors import LinearSolverError
from src.utils.errors import NonlinearSolveError
from src.utils.logging import custom_print

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONLINEAR = 3
EXIT_LINEAR = 4

MESH_PATTERN = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$")


def parse_mesh(text: str) -> tuple[int, int]:
    """
    Parses a mesh size of the form NXxNY.

    Raises:
        ConfigError: If the text is malformed.
    """
    match = MESH_PATTERN.match(text)
    if match is None:
        raise ConfigError(f"malformed mesh '{text}', expected NXxNY such as 40x20")
    return int(match.group(1)), int(match.group(2))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Two-fluid level-set flow solver")
    parser.add_argument("--config", type=str, default=os.getenv("TWOFLUID_CONFIG"), help="case file (key = value)")
    parser.add_argument(
        "--formulation",
        type=str,
        choices=[f.value for f in Formulation],
        help="override the formulation of the case file",
    )
    parser.add_argument("--mesh", type=str, help="override the mesh, e.g. 80x40")
    parser.add_argument("--end-time", type=float, help="override the end time in seconds")
    parser.add_argument("--out", type=str, help="override the output directory")
    parser.add_argument(
        "--verbose",
        type=int,
        default=None,
        help="0 silent, 1 per step, 2 per iteration, 3 per Krylov iteration (default: TWOFLUID_VERBOSE or 1)",
    )
    return parser


def verbosity_from_env() -> int:
    """
    Reads TWOFLUID_VERBOSE (default 1).

    Raises:
        ConfigError: If the variable is not an integer.
    """
    text = os.getenv("TWOFLUID_VERBOSE", "1")
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"TWOFLUID_VERBOSE must be an integer, got '{text}'") from None


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """
    Reads the case file (or the defaults) and applies the command-line overrides.

    Raises:
        ConfigError: On any invalid input.
    """
    config = parse_config(args.config) if args.config else RunConfig()
    overrides = {}
    if args.formulation:
        overrides["formulation"] = args.formulation
    if args.mesh:
        overrides["n_x"], overrides["n_y"] = parse_mesh(args.mesh)
    if args.end_time is not None:
        overrides["end_time"] = args.end_time
    if args.out:
        overrides["output_dir"] = args.out
    return replace(config, **overrides) if overrides else config


def cli_main(argv: list[str] | None = None) -> int:
    """
    Command-line entry point.

    Args:
        argv (list[str] | None): Arguments without the program name.

    Returns:
        int: 0 on success, 2 for configuration errors, 3 for nonlinear failures,
        4 for linear-solver failures.
    """
    load_dotenv()
    init()
    args = build_parser().parse_args(argv)
    try:
        verbose = args.verbose if args.verbose is not None else verbosity_from_env()
        config = resolve_config(args)
        result = run_simulation(config, verbose=verbose)
    except ConfigError as exc:
        print(Fore.RED + f"configuration error: {exc}")
        return EXIT_CONFIG
    except NonlinearSolveError as exc:
        print(Fore.RED + f"nonlinear solver failed: {exc}")
        return EXIT_NONLINEAR
    except LinearSolverError as exc:
        print(Fore.RED + f"linear solver failed: {exc}")
        return EXIT_LINEAR
    if verbose > 0:
        final = result.trace[-1]
        custom_print(
            f"finished at t = {final.t_s:.4f} s after {final.step} steps; "
            f"E = {final.total_energy:.6e} J/m (initially {result.initial_energy:.6e} J/m)"
        )
    return EXIT_OK
