import numpy as np
import pytest

from src.assembly.assembler import assemble_jacobian
from src.assembly.discretization import build_discretization
from src.levelset_kernel.properties import FluidParams
from src.spline_spaces.knot_vector import eval_basis_1d
from src.spline_spaces.spaces import Rectangle
from src.twofluid_forms.state import FormKind
from src.twofluid_forms.state import State
from src.twofluid_forms.state import state_from_fields

UNIT_BOX = Rectangle(0.0, 0.0, 1.0, 0.5)


@pytest.fixture
def disc():
    return build_discretization(4, 2, UNIT_BOX)


@pytest.fixture
def disc_4x4():
    return build_discretization(4, 4, Rectangle(0.0, 0.0, 1.0, 1.0))


@pytest.fixture
def params():
    return FluidParams(rho0=1.0, rho1=10.0, mu0=0.5, mu1=1.5, g=(0.0, -9.81))


def pointwise_field(space, coeffs, x, y):
    """Brute-force evaluation of a spline field at one point from the 1D bases."""
    fx, vx, _ = eval_basis_1d(space.kv_x, x)
    fy, vy, _ = eval_basis_1d(space.kv_y, y)
    total = 0.0
    for b, value_y in enumerate(vy):
        for a, value_x in enumerate(vx):
            total += coeffs[space.dof_index(fx + a, fy + b)] * value_x * value_y
    return total


def pointwise_gradient(space, coeffs, x, y):
    """Brute-force gradient of a spline field at one point."""
    fx, vx, dx = eval_basis_1d(space.kv_x, x)
    fy, vy, dy = eval_basis_1d(space.kv_y, y)
    gradient = np.zeros(2)
    for b in range(len(vy)):
        for a in range(len(vx)):
            c = coeffs[space.dof_index(fx + a, fy + b)]
            gradient += c * np.array([dx[a] * vy[b], vx[a] * dy[b]])
    return gradient


def tilted_levelset(disc, slope=0.3, height=0.25, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    phi = disc.spaces.levelset.interpolate_greville(lambda x, y: (y - height) + slope * (x - 0.5))
    return phi + noise * rng.standard_normal(disc.n_phi)


def wall_free(disc, u_x, u_y):
    u_x = np.array(u_x, dtype=float)
    u_y = np.array(u_y, dtype=float)
    u_x[disc.boundary.u_x] = 0.0
    u_y[disc.boundary.u_y] = 0.0
    return u_x, u_y


def random_state(disc, seed=0, velocity=0.3, pressure=1.0, noise=0.01, time=0.0) -> State:
    """A two-fluid state with a tilted interface and random velocity and pressure."""
    rng = np.random.default_rng(seed)
    u_x, u_y = wall_free(
        disc,
        velocity * rng.standard_normal(disc.n_u_x),
        velocity * rng.standard_normal(disc.n_u_y),
    )
    return state_from_fields(
        disc,
        u_x=u_x,
        u_y=u_y,
        p=pressure * rng.standard_normal(disc.n_p),
        phi=tilted_levelset(disc, noise=noise, seed=seed),
        time=time,
    )


def solenoidal(disc, state: State, params: FluidParams) -> State:
    """Projects the velocity of a state onto the discretely divergence-free fields with u.n = 0."""
    kind = FormKind.from_name("conservative")
    J = assemble_jacobian(disc, kind, state, state, 1.0, params, apply_dirichlet=False)
    D = np.hstack([J.block("p", "u_x").toarray(), J.block("p", "u_y").toarray()])
    u = np.concatenate([state.u_x, state.u_y])
    interior = np.ones(u.size, dtype=bool)
    interior[disc.boundary.u_x] = False
    interior[disc.n_u_x + disc.boundary.u_y] = False
    D_int = D[:, interior]
    u_int = u[interior]
    u_int = u_int - np.linalg.pinv(D_int) @ (D_int @ u_int)
    u = np.zeros_like(u)
    u[interior] = u_int
    projected = state.copy()
    projected.u_x = u[: disc.n_u_x]
    projected.u_y = u[disc.n_u_x:]
    return projected
