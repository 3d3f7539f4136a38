import numpy as np
from scipy.sparse import coo_matrix

from src.assembly.context import build_context
from src.assembly.discretization import PERTURBATION_BLOCKS
from src.assembly.discretization import Discretization
from src.assembly.sparse import BlockLayout
from src.assembly.sparse import BlockVector
from src.assembly.sparse import SparseMatrix
from src.levelset_kernel.properties import FluidParams
from src.twofluid_forms import forms
from src.twofluid_forms.constraints import ConstraintProblem
from src.twofluid_forms.state import FormKind
from src.twofluid_forms.state import State

TAU_LINEARIZATIONS = ("frozen", "exact")


def layout_for(disc: Discretization, kind: FormKind) -> BlockLayout:
    return disc.block_layout(kind.constraint_indices)


def pack_unknowns(layout: BlockLayout, iterate: State) -> np.ndarray:
    """Gathers the unknowns of the iterate in layout order (phi holds phi_0)."""
    blocks = {"u_x": iterate.u_x, "u_y": iterate.u_y, "p": iterate.p, "phi": iterate.phi}
    for i, name in enumerate(PERTURBATION_BLOCKS):
        blocks[name] = iterate.phi_pert[i]
    return layout.join(blocks)


def apply_update(layout: BlockLayout, iterate: State, dx: np.ndarray) -> State:
    """
    Returns a copy of the iterate with the increment dx added block by block.

    Args:
        layout (BlockLayout): Layout of dx.
        iterate (State): The iterate.
        dx (numpy.ndarray): Increment.

    Returns:
        State: The updated iterate; alpha and the multipliers are unchanged.
    """
    updated = iterate.copy()
    blocks = layout.split(dx)
    updated.u_x += blocks["u_x"]
    updated.u_y += blocks["u_y"]
    updated.p += blocks["p"]
    updated.phi += blocks["phi"]
    for i, name in enumerate(PERTURBATION_BLOCKS):
        if name in blocks:
            updated.phi_pert[i] += blocks[name]
    return updated


def constraint_loads(
    disc: Discretization, kind: FormKind, state_n: State, iterate: State, dt: float, params: FluidParams
) -> np.ndarray:
    """
    The load vectors of the perturbation problems, zero for inactive constraints.

    Returns:
        numpy.ndarray: Shape (3, n_phi).
    """
    loads = np.zeros((3, disc.n_phi))
    if kind.constraints:
        variations = ConstraintProblem(disc, state_n, iterate, dt, params).variations(iterate.lambdas)
        for i in kind.constraint_indices:
            loads[i] = variations[i]
    return loads


def assemble_residual(
    disc: Discretization,
    kind: FormKind,
    state_n: State,
    iterate: State,
    dt: float,
    params: FluidParams,
    dh_vectors: np.ndarray | None = None,
    apply_dirichlet: bool = True,
) -> BlockVector:
    """
    Assembles the residual (R_u, R_p, R_phi, R_phi_i) of one Crank-Nicolson step.

    Args:
        disc (Discretization): The discretization.
        kind (FormKind): The formulation.
        state_n (State): Accepted state at level n.
        iterate (State): Current iterate of level n+1.
        dt (float): Time-step size in seconds.
        params (FluidParams): Material data.
        dh_vectors (numpy.ndarray | None): Constraint loads of shape (3, n_phi);
            computed from the iterate when omitted.
        apply_dirichlet (bool): Replace no-penetration rows by the coefficient value.

    Returns:
        BlockVector: The residual.

    Raises:
        NonFiniteError: If a field is not finite at a quadrature point.
    """
    layout = layout_for(disc, kind)
    if dh_vectors is None:
        dh_vectors = constraint_loads(disc, kind, state_n, iterate, dt, params)
    ctx = build_context(disc, state_n, iterate, dt, params)

    blocks = forms.residual_momentum_continuity(kind, ctx)
    lambdas = np.zeros(3)
    lambdas[list(kind.constraint_indices)] = iterate.lambdas[list(kind.constraint_indices)]
    blocks["phi"] = forms.residual_levelset(ctx, lambdas, dh_vectors)
    for i in kind.constraint_indices:
        blocks[PERTURBATION_BLOCKS[i]] = forms.residual_perturbation(ctx, iterate.phi_pert[i], dh_vectors[i])

    values = layout.join(blocks)
    if apply_dirichlet:
        rows = disc.dirichlet_rows(layout)
        values[rows] = pack_unknowns(layout, iterate)[rows]
    return BlockVector(values=values, layout=layout)


def assemble_jacobian(
    disc: Discretization,
    kind: FormKind,
    state_n: State,
    iterate: State,
    dt: float,
    params: FluidParams,
    tau_linearization: str = "frozen",
    apply_dirichlet: bool = True,
) -> SparseMatrix:
    """
    Assembles the quasi-Newton Jacobian of assemble_residual with respect to the
    level n+1 unknowns.

    The perturbation rows carry the convection block only; alpha and the
    constraint loads are held fixed.

    Args:
        disc (Discretization): The discretization.
        kind (FormKind): The formulation.
        state_n (State): Accepted state at level n.
        iterate (State): Current iterate of level n+1.
        dt (float): Time-step size in seconds.
        params (FluidParams): Material data.
        tau_linearization (str): "frozen" holds the SUPG parameter fixed, "exact"
            differentiates it.
        apply_dirichlet (bool): Replace no-penetration rows by identity rows.

    Returns:
        SparseMatrix: The Jacobian.
    """
    if tau_linearization not in TAU_LINEARIZATIONS:
        raise ValueError(f"unknown tau linearization '{tau_linearization}', expected one of {TAU_LINEARIZATIONS}")
    layout = layout_for(disc, kind)
    ctx = build_context(disc, state_n, iterate, dt, params)
    tables = disc.tables

    entries = forms.jacobian_momentum(kind, ctx)
    entries += forms.jacobian_levelset_velocity(ctx, exact_tau=tau_linearization == "exact")
    convection = forms.convection_block(ctx)
    entries.append(("phi", "phi", convection))
    for i in kind.constraint_indices:
        name = PERTURBATION_BLOCKS[i]
        entries.append((name, name, convection))

    rows, cols, vals = [], [], []
    for row, col, local in entries:
        r, c, v = tables[_table_of(row)].triplets(tables[_table_of(col)], local)
        rows.append(r + layout.offset(row))
        cols.append(c + layout.offset(col))
        vals.append(v)

    # the gradient block is summed on its own so its transpose is bitwise exact
    p_off = layout.offset("p")
    for name, local in forms.gradient_blocks(ctx).items():
        r, c, v = tables[name].triplets(tables["p"], local)
        block = coo_matrix((v, (r, c)), shape=(tables[name].n_dofs, disc.n_p)).tocsr().tocoo()
        u_off = layout.offset(name)
        rows += [block.row + u_off, block.col + p_off]
        cols += [block.col + p_off, block.row + u_off]
        vals += [block.data, block.data]

    A = SparseMatrix.from_triplets(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), layout)
    if apply_dirichlet:
        A.replace_rows_with_identity(disc.dirichlet_rows(layout))
    return A


def _table_of(block: str) -> str:
    return "phi" if block.startswith("phi") else block
