import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import gmres
from scipy.sparse.linalg import spilu

from src.assembly.sparse import BlockVector
from src.assembly.sparse import SparseMatrix
from src.utils.errors import LinearSolverError
from src.utils.logging import log_warning

PRECONDITIONERS = ("jacobi", "ilu")


@dataclass(frozen=True)
class KrylovConfig:
    """
    Settings of the restarted GMRES solve.

    Attributes:
        rel_tol (float): Target of ||b - Ax|| relative to ||b||.
        abs_tol (float): Absolute floor of the target.
        restart (int): Krylov vectors per restart cycle.
        max_iters (int): Total inner iterations allowed.
        preconditioner (str): "ilu" or "jacobi".
        ilu_drop_tol (float): Drop tolerance of the incomplete factorisation.
        ilu_fill_factor (float): Fill limit of the incomplete factorisation.
        pressure_shift (float): Relative shift of the pressure diagonal in the
            matrix handed to the factorisation.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-14
    restart: int = 60
    max_iters: int = 2000
    preconditioner: str = "ilu"
    ilu_drop_tol: float = 1e-5
    ilu_fill_factor: float = 20.0
    pressure_shift: float = 1e-8

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("Krylov tolerances must be positive")
        if self.restart < 10:
            raise ValueError(f"restart must be at least 10, got {self.restart}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be positive, got {self.max_iters}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner '{self.preconditioner}', expected one of {PRECONDITIONERS}")


@dataclass
class KrylovResult:
    """
    Outcome of a Krylov solve.

    Attributes:
        x (numpy.ndarray): The solution.
        iterations (int): Inner GMRES iterations.
        residual_norm (float): True residual norm ||b - Ax||.
        history (list[float]): Preconditioned residual norm per inner iteration.
        cycle_starts (list[int]): Index into history of the first iteration of
            every restart cycle.
    """

    x: np.ndarray
    iterations: int
    residual_norm: float
    history: list[float] = field(default_factory=list)
    cycle_starts: list[int] = field(default_factory=list)

    @property
    def cycles(self) -> list[list[float]]:
        """The residual history split into restart cycles."""
        bounds = [*self.cycle_starts, len(self.history)]
        return [self.history[start:stop] for start, stop in zip(bounds[:-1], bounds[1:])]


class GmresCounter:
    """
    Counts GMRES iterations and keeps the residual history.

    Wrapping the system matrix with `count` lets the counter tell restart cycles
    apart: inside a cycle every iteration applies the matrix once, a restart
    applies it once more to recompute the true residual.
    """

    def __init__(self, verbose: int = 0):
        self.niter = 0
        self.history = []
        self.cycle_starts = []
        self.verbose = verbose
        self._matvecs = 0

    def count(self, matrix) -> LinearOperator:
        def matvec(v):
            self._matvecs += 1
            return matrix @ v

        return LinearOperator(matrix.shape, matvec=matvec, dtype=float)

    def __call__(self, residual_norm=None):
        if self.niter == 0 or self._matvecs > 1:
            self.cycle_starts.append(self.niter)
        self._matvecs = 0
        self.niter += 1
        self.history.append(float(residual_norm))
        if self.verbose > 2:
            print(f"      gmres {self.niter:4d}  residual = {residual_norm:.3e}")


class Preconditioner:
    """
    A one-level preconditioner of the block system.

    ILU factorises a copy of the matrix whose pressure diagonal is shifted by a
    tiny negative amount, since the constant pressure makes the matrix singular.
    If the factorisation fails, Jacobi is used instead.

    Attributes:
        kind (str): "ilu" or "jacobi" (after a possible fallback).
        operator (LinearOperator): Application of the approximate inverse.
    """

    def __init__(self, A: SparseMatrix, cfg: KrylovConfig, verbose: int = 0):
        self.kind = cfg.preconditioner
        self.operator = None
        if self.kind == "ilu":
            try:
                self.operator = self._ilu(A, cfg)
            except RuntimeError as exc:
                if verbose > 0:
                    log_warning(f"incomplete LU failed ({exc}); falling back to Jacobi")
                self.kind = "jacobi"
        if self.operator is None:
            self.operator = self._jacobi(A)

    @staticmethod
    def _ilu(A: SparseMatrix, cfg: KrylovConfig) -> LinearOperator:
        matrix = A.csr
        if "p" in A.layout.names:
            shift = np.zeros(A.shape[0])
            scale = np.max(np.abs(matrix.diagonal()))
            shift[A.layout.slice("p")] = -cfg.pressure_shift * scale
            matrix = matrix + diags(shift)
        ilu = spilu(matrix.tocsc(), drop_tol=cfg.ilu_drop_tol, fill_factor=cfg.ilu_fill_factor)
        return LinearOperator(A.shape, ilu.solve)

    @staticmethod
    def _jacobi(A: SparseMatrix) -> LinearOperator:
        diagonal = A.csr.diagonal().copy()
        diagonal[diagonal == 0.0] = 1.0
        inverse = 1.0 / diagonal
        return LinearOperator(A.shape, lambda v: inverse * v)


def krylov_solve(A: SparseMatrix, b: np.ndarray, cfg: KrylovConfig, verbose: int = 0) -> KrylovResult:
    """
    Solves A x = b with preconditioned restarted GMRES.

    Args:
        A (SparseMatrix): Square system matrix.
        b (numpy.ndarray): Right-hand side.
        cfg (KrylovConfig): Solver settings.
        verbose (int): Prints every inner iteration above 2.

    Returns:
        KrylovResult: Solution with ||b - Ax|| <= max(rel_tol ||b||, abs_tol).

    Raises:
        ValueError: If A is not square or b does not match.
        LinearSolverError: If the target is not reached within max_iters.
    """
    n, m = A.shape
    b = np.asarray(b, dtype=float)
    if n != m:
        raise ValueError(f"the system matrix must be square, got {A.shape}")
    if b.shape != (n,):
        raise ValueError(f"right-hand side of shape {b.shape} does not match a {A.shape} matrix")

    target = max(cfg.rel_tol * float(np.linalg.norm(b)), cfg.abs_tol)
    if np.linalg.norm(b) <= cfg.abs_tol:
        return KrylovResult(x=np.zeros(n), iterations=0, residual_norm=float(np.linalg.norm(b)))

    preconditioner = Preconditioner(A, cfg, verbose=verbose)
    counter = GmresCounter(verbose)
    x, info = gmres(
        counter.count(A.csr),
        b,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        restart=cfg.restart,
        maxiter=math.ceil(cfg.max_iters / cfg.restart),
        M=preconditioner.operator,
        callback=counter,
        callback_type="pr_norm",
    )
    residual_norm = float(np.linalg.norm(b - A.csr @ x))
    if info != 0 and residual_norm > target:
        raise LinearSolverError(
            f"GMRES ({preconditioner.kind}) stopped after {counter.niter} iterations with "
            f"residual {residual_norm:.3e} > {target:.3e}",
            x=x,
            residual_norm=residual_norm,
            iterations=counter.niter,
        )
    return KrylovResult(
        x=x,
        iterations=counter.niter,
        residual_norm=residual_norm,
        history=counter.history,
        cycle_starts=counter.cycle_starts,
    )


def project_pressure_nullspace(x: BlockVector, pressure_weights: np.ndarray) -> BlockVector:
    """
    Removes the mean of the pressure block so that the integral of p vanishes.

    Args:
        x (BlockVector): Vector with a "p" block.
        pressure_weights (numpy.ndarray): Integral of every pressure basis function.

    Returns:
        BlockVector: A copy with a zero-mean pressure.
    """
    values = x.values.copy()
    p = values[x.layout.slice("p")]
    p -= np.dot(pressure_weights, p) / np.sum(pressure_weights)
    return BlockVector(values=values, layout=x.layout)
