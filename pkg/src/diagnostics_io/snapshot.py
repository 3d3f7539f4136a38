from pathlib import Path

import numpy as np

from src.assembly.discretization import Discretization
from src.levelset_kernel.properties import FluidParams
from src.levelset_kernel.properties import eval_props
from src.levelset_kernel.properties import floor_alpha
from src.twofluid_forms.state import State

SNAPSHOT_COLUMNS = ("x", "y", "u_x", "u_y", "p", "phi", "rho")


def sample_lattice(disc: Discretization, resolution: int = 4):
    """
    Cell-centred sample points, resolution by resolution per element.

    Returns:
        tuple[numpy.ndarray, numpy.ndarray]: Abscissae and ordinates.
    """
    if resolution < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")
    domain = disc.spaces.domain
    dx = disc.spaces.h_x / resolution
    dy = disc.spaces.h_y / resolution
    xs = domain.x0 + dx * (np.arange(disc.spaces.n_x * resolution) + 0.5)
    ys = domain.y0 + dy * (np.arange(disc.spaces.n_y * resolution) + 0.5)
    return xs, ys


def sample_state(disc: Discretization, state: State, params: FluidParams, resolution: int = 4) -> np.ndarray:
    """
    Samples a state on the snapshot lattice.

    Returns:
        numpy.ndarray: One row (x, y, u_x, u_y, p, phi, rho) per point, x fastest.
    """
    spaces = disc.spaces
    xs, ys = sample_lattice(disc, resolution)
    phi = spaces.levelset.evaluate_grid(state.composed_phi(), xs, ys)
    alpha = floor_alpha(spaces.alpha.evaluate_grid(state.alpha, xs, ys))
    rho, _, _, _ = eval_props(phi, alpha, params)
    gx, gy = np.meshgrid(xs, ys)
    columns = [
        gx,
        gy,
        spaces.v_x.evaluate_grid(state.u_x, xs, ys),
        spaces.v_y.evaluate_grid(state.u_y, xs, ys),
        spaces.pressure.evaluate_grid(state.p, xs, ys),
        phi,
        rho,
    ]
    return np.column_stack([c.ravel() for c in columns])


def write_snapshot(
    disc: Discretization,
    state: State,
    params: FluidParams,
    path: str | Path,
    resolution: int = 4,
) -> Path:
    """
    Writes a plain-text structured-grid snapshot.

    The header line holds nx ny x0 y0 dx dy time of the lattice; every further
    line holds x y u_x u_y p phi rho.

    Args:
        disc (Discretization): The discretization.
        state (State): The state, stamped with its time.
        params (FluidParams): Material data.
        path (str | Path): Destination.
        resolution (int): Sample points per element and direction.

    Returns:
        Path: The written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    xs, ys = sample_lattice(disc, resolution)
    lattice = [xs[0], ys[0], xs[1] - xs[0], ys[1] - ys[0], state.time]
    header = f"{len(xs)} {len(ys)} " + " ".join(repr(float(v)) for v in lattice) + "\n" + " ".join(SNAPSHOT_COLUMNS)
    np.savetxt(path, sample_state(disc, state, params, resolution), header=header, comments="# ", fmt="%.10e")
    return path


def read_snapshot(path: str | Path):
    """
    Reads a snapshot.

    Returns:
        tuple: (header dict with nx, ny, x0, y0, dx, dy, time; data of shape (N, 7)).
    """
    with open(path) as handle:
        values = handle.readline().lstrip("#").split()
    header = dict(zip(("nx", "ny", "x0", "y0", "dx", "dy", "time"), values))
    header = {key: (int(v) if key in ("nx", "ny") else float(v)) for key, v in header.items()}
    return header, np.loadtxt(path, ndmin=2)
