"""
Element kernels of the two-fluid formulations.

Residual kernels return global vectors; Jacobian kernels return lists of
(row_block, col_block, element_matrices) with element matrices of shape
(E, nloc_row, nloc_col). The continuity equation is multiplied by -2 so that
its velocity block is the transpose of the pressure-gradient block.
"""

import numpy as np

from src.assembly.context import ElementContext
from src.twofluid_forms.state import FormKind

VELOCITY_BLOCKS = ("u_x", "u_y")


def _strain(grad_u: np.ndarray) -> np.ndarray:
    # [..., i, j] = d_j u_i + d_i u_j
    return grad_u + np.swapaxes(grad_u, -1, -2)


def momentum_coefficients(kind: FormKind, ctx: ElementContext):
    """
    Pointwise coefficients of the momentum residual.

    For velocity component i and test function N the residual integrand is
    value[..., i] * N + sum_j flux[..., i, j] * d_j N.

    Args:
        kind (FormKind): The formulation.
        ctx (ElementContext): Quadrature-point fields.

    Returns:
        tuple: (value of shape (E, Q, 2), flux of shape (E, Q, 2, 2)).
    """
    old, new = ctx.old, ctx.new
    g = ctx.params.gravity
    rho_mid = ctx.rho_mid[..., None]
    viscous = ctx.mu_mid[..., None, None] * _strain(ctx.grad_u_mid)
    pressure = new.p[..., None, None] * np.eye(2)
    if kind.convective:
        value = rho_mid * ((new.u - old.u) / ctx.dt + ctx.convection_mid - g)
        flux = viscous - pressure
    else:
        value = (new.rho[..., None] * new.u - old.rho[..., None] * old.u) / ctx.dt - rho_mid * g
        advective = np.einsum("eqi,eqj->eqij", ctx.u_mid, ctx.u_mid)
        flux = viscous - pressure - ctx.rho_mid[..., None, None] * advective
    return value, flux


def residual_momentum_continuity(kind: FormKind, ctx: ElementContext) -> dict[str, np.ndarray]:
    """
    Momentum and (scaled) continuity residuals.

    Args:
        kind (FormKind): The formulation.
        ctx (ElementContext): Quadrature-point fields.

    Returns:
        dict[str, numpy.ndarray]: Global vectors for "u_x", "u_y" and "p".
    """
    tables = ctx.disc.tables
    w = ctx.weights
    value, flux = momentum_coefficients(kind, ctx)
    result = {}
    for i, name in enumerate(VELOCITY_BLOCKS):
        t = tables[name]
        local = np.einsum("eq,eq,eqa->ea", w, value[..., i], t.values)
        local += np.einsum("eq,eqj,eqaj->ea", w, flux[..., i, :], t.gradients)
        result[name] = t.scatter(local)
    divergence = ctx.old.divergence + ctx.new.divergence
    result["p"] = tables["p"].scatter(-np.einsum("eq,eq,eqa->ea", w, divergence, tables["p"].values))
    return result


def gradient_blocks(ctx: ElementContext) -> dict[str, np.ndarray]:
    """
    Element matrices -(Q, d_i N) coupling velocity component i to pressure.

    Returns:
        dict[str, numpy.ndarray]: Per velocity block, shape (E, nloc_u, nloc_p).
    """
    tables = ctx.disc.tables
    q = tables["p"].values
    return {
        name: -np.einsum("eq,eqa,eqb->eab", ctx.weights, tables[name].gradients[..., i], q)
        for i, name in enumerate(VELOCITY_BLOCKS)
    }


def jacobian_momentum(kind: FormKind, ctx: ElementContext) -> list:
    """
    Derivatives of the momentum residual with respect to u^{n+1} and phi^{n+1}.

    The pressure blocks are produced by gradient_blocks.

    Args:
        kind (FormKind): The formulation.
        ctx (ElementContext): Quadrature-point fields.

    Returns:
        list: (row_block, col_block, element_matrices) entries.
    """
    tables = ctx.disc.tables
    w = ctx.weights
    dt = ctx.dt
    old, new = ctx.old, ctx.new
    u_mid, grad_mid = ctx.u_mid, ctx.grad_u_mid
    rho_mid, mu_mid = ctx.rho_mid, ctx.mu_mid
    g = ctx.params.gravity
    strain = _strain(grad_mid)
    blocks = []

    for i, row in enumerate(VELOCITY_BLOCKS):
        n = tables[row].values
        grad_n = tables[row].gradients
        advect_n = np.einsum("eqj,eqaj->eqa", u_mid, grad_n)
        for k, col in enumerate(VELOCITY_BLOCKS):
            m = tables[col].values
            grad_m = tables[col].gradients
            same = i == k
            local = 0.5 * np.einsum("eq,eqa,eqb->eab", w * mu_mid, grad_n[..., k], grad_m[..., i])
            if same:
                local += 0.5 * np.einsum("eq,eqaj,eqbj->eab", w * mu_mid, grad_n, grad_m)
            if kind.convective:
                coeff = rho_mid * (0.5 * grad_mid[..., i, k] + (1.0 / dt if same else 0.0))
                local += np.einsum("eq,eqa,eqb->eab", w * coeff, n, m)
                if same:
                    advect_m = np.einsum("eqj,eqbj->eqb", u_mid, grad_m)
                    local += 0.5 * np.einsum("eq,eqa,eqb->eab", w * rho_mid, n, advect_m)
            else:
                local -= 0.5 * np.einsum("eq,eqa,eqb->eab", w * rho_mid * u_mid[..., i], grad_n[..., k], m)
                if same:
                    local += np.einsum("eq,eqa,eqb->eab", w * new.rho / dt, n, m)
                    local -= 0.5 * np.einsum("eq,eqa,eqb->eab", w * rho_mid, advect_n, m)
            blocks.append((row, col, local))

        p = tables["phi"].values
        if kind.convective:
            value = 0.5 * new.drho * ((new.u[..., i] - old.u[..., i]) / dt + ctx.convection_mid[..., i] - g[i])
            flux = 0.5 * new.dmu[..., None] * strain[..., i, :]
        else:
            value = new.drho * (new.u[..., i] / dt - 0.5 * g[i])
            flux = (
                -0.5 * new.drho[..., None] * u_mid[..., i, None] * u_mid
                + 0.5 * new.dmu[..., None] * strain[..., i, :]
            )
        local = np.einsum("eq,eqa,eqb->eab", w * value, n, p)
        local += np.einsum("eq,eqj,eqaj,eqb->eab", w, flux, grad_n, p)
        blocks.append((row, "phi", local))
    return blocks


def supg_test_functions(ctx: ElementContext) -> np.ndarray:
    """Streamline-upwind test functions psi + tau u_mid . grad psi, shape (E, Q, nloc)."""
    t = ctx.disc.tables["phi"]
    return t.values + ctx.tau[..., None] * np.einsum("eqj,eqaj->eqa", ctx.u_mid, t.gradients)


def residual_levelset(ctx: ElementContext, lambdas: np.ndarray, dh_vectors: np.ndarray) -> np.ndarray:
    """
    Galerkin/SUPG residual of the midpoint level-set convection equation.

    The constraint loads enter as -sum_i lambdas[i] * dh_vectors[i], matching the
    composition phi = phi_0 + sum_i lambdas[i] phi_i with L(phi_i) = dh_i.

    Args:
        ctx (ElementContext): Quadrature-point fields, with the composed level set.
        lambdas (numpy.ndarray): Lagrange multipliers, shape (3,).
        dh_vectors (numpy.ndarray): Constraint variations, shape (3, n_phi).

    Returns:
        numpy.ndarray: The level-set residual.
    """
    t = ctx.disc.tables["phi"]
    local = np.einsum("eq,eqa,eq->ea", ctx.weights, supg_test_functions(ctx), ctx.levelset_rate)
    return t.scatter(local) - np.asarray(lambdas) @ np.asarray(dh_vectors)


def residual_perturbation(ctx: ElementContext, phi_i: np.ndarray, dh_i: np.ndarray) -> np.ndarray:
    """
    Residual of one perturbation problem: the linearised convection operator
    applied to phi_i (which starts every step at zero) minus the load dh_i.

    Args:
        ctx (ElementContext): Quadrature-point fields.
        phi_i (numpy.ndarray): Perturbation coefficients at level n+1.
        dh_i (numpy.ndarray): The load vector.

    Returns:
        numpy.ndarray: The residual.
    """
    t = ctx.disc.tables["phi"]
    rate = t.evaluate(phi_i) / ctx.dt + 0.5 * np.einsum("eqj,eqj->eq", ctx.u_mid, t.evaluate_gradient(phi_i))
    local = np.einsum("eq,eqa,eq->ea", ctx.weights, supg_test_functions(ctx), rate)
    return t.scatter(local) - dh_i


def convection_block(ctx: ElementContext) -> np.ndarray:
    """
    Element matrices of the linearised level-set operator (block C), shared by
    the level-set row and every perturbation row.
    """
    t = ctx.disc.tables["phi"]
    trial = t.values / ctx.dt + 0.5 * np.einsum("eqj,eqbj->eqb", ctx.u_mid, t.gradients)
    return np.einsum("eq,eqa,eqb->eab", ctx.weights, supg_test_functions(ctx), trial)


def jacobian_levelset_velocity(ctx: ElementContext, exact_tau: bool = False) -> list:
    """
    Derivatives of the level-set residual with respect to the velocity (block B2).

    Args:
        ctx (ElementContext): Quadrature-point fields.
        exact_tau (bool): Also differentiate tau; by default tau is frozen.

    Returns:
        list: (row_block, col_block, element_matrices) entries.
    """
    tables = ctx.disc.tables
    t = tables["phi"]
    w = ctx.weights
    rate = ctx.levelset_rate
    test = supg_test_functions(ctx)
    streamline = np.einsum("eqj,eqaj->eqa", ctx.u_mid, t.gradients)
    blocks = []
    for k, col in enumerate(VELOCITY_BLOCKS):
        m = tables[col].values
        local = np.einsum("eq,eqa,eqb->eab", w * 0.5 * ctx.tau * rate, t.gradients[..., k], m)
        local += np.einsum("eq,eqa,eqb->eab", w * 0.5 * ctx.grad_phi_mid[..., k], test, m)
        if exact_tau:
            g_kk = ctx.disc.metric[k, k]
            coeff = -0.5 * ctx.tau**3 * g_kk * ctx.u_mid[..., k] * rate
            local += np.einsum("eq,eqa,eqb->eab", w * coeff, streamline, m)
        blocks.append(("phi", col, local))
    return blocks
