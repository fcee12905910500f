"""Linear-solve contract and block-system flattening."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .mesh import DimensionError

LU_ORDERING = "COLAMD"


class SolverError(RuntimeError):
    """Raised when a solve misses its residual target."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolverSettings:
    method: str = "direct"  # "direct" | "gmres" | "bicgstab"
    tol: float = 1e-10
    maxiter: int = 2000


def _relative_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / nb if nb > 0 else r


def solve_sparse(A, b, tol: float = 1e-10, method: str = "direct", maxiter: int = 2000):
    """Solve ``A x = b`` and check ``||Ax - b|| <= tol ||b||``.

    ``method="direct"`` uses a sparse LU factorization; the iterative methods
    are preconditioned with an incomplete LU factorization.
    """
    A = sparse.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix must be square, got {A.shape}")
    if b.shape != (A.shape[0],):
        raise DimensionError(f"rhs has shape {b.shape}, matrix is {A.shape}")
    if not np.any(b):
        return np.zeros_like(b)

    if method == "direct":
        try:
            x = spla.splu(A, permc_spec=LU_ORDERING).solve(b)
        except RuntimeError as exc:  # singular factor
            raise SolverError(f"sparse LU failed: {exc}", float("inf")) from exc
    elif method in ("gmres", "bicgstab"):
        try:
            ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=20)
            prec = spla.LinearOperator(A.shape, ilu.solve)
        except RuntimeError:
            prec = None
        solver = spla.gmres if method == "gmres" else spla.bicgstab
        kwargs = {"restart": 200} if method == "gmres" else {}
        x, info = solver(A, b, rtol=tol * 0.1, atol=0.0, maxiter=maxiter, M=prec, **kwargs)
        if info != 0:
            raise SolverError(f"{method} did not converge (info={info})", _relative_residual(A, x, b))
    else:
        raise ValueError(f"unknown solver method {method!r}")

    res = _relative_residual(A, x, b)
    if not np.isfinite(res) or res > tol:
        raise SolverError("solution misses the residual target", res)
    return x


def solve(A, b, settings: SolverSettings | None = None):
    s = settings or SolverSettings()
    return solve_sparse(A, b, tol=s.tol, method=s.method, maxiter=s.maxiter)


@dataclass
class BlockSystem:
    """k-by-k block description of a coupled linear system.

    Each entry is ``(block_row, block_col, matrix, coefficient)``; entries
    addressing the same block are summed.  ``rhs`` holds one vector per block
    row.  The flattened unknown ordering is block-major: all nodes of block 0,
    then all nodes of block 1, and so on.
    """

    sizes: list[int]
    entries: list[tuple[int, int, object, float]] = field(default_factory=list)
    rhs: list[np.ndarray] | None = None

    def add(self, i: int, j: int, matrix, coef: float = 1.0) -> None:
        self.entries.append((i, j, matrix, coef))

    @property
    def k(self) -> int:
        return len(self.sizes)


def flatten_block_system(system: BlockSystem):
    k = system.k
    grid = [[None] * k for _ in range(k)]
    for i, j, mat, coef in system.entries:
        if not (0 <= i < k and 0 <= j < k):
            raise DimensionError(f"block ({i}, {j}) outside a {k}x{k} grid")
        if mat.shape != (system.sizes[i], system.sizes[j]):
            raise DimensionError(
                f"block ({i}, {j}) has shape {mat.shape}, expected "
                f"{(system.sizes[i], system.sizes[j])}"
            )
        term = coef * sparse.csr_matrix(mat)
        grid[i][j] = term if grid[i][j] is None else grid[i][j] + term
    for i in range(k):
        if grid[i][i] is None:
            grid[i][i] = sparse.csr_matrix((system.sizes[i], system.sizes[i]))
    A = sparse.bmat(grid, format="csr")
    A.eliminate_zeros()
    A.sort_indices()
    if system.rhs is None:
        b = np.zeros(A.shape[0])
    else:
        if len(system.rhs) != k:
            raise DimensionError(f"expected {k} rhs blocks, got {len(system.rhs)}")
        for i, r in enumerate(system.rhs):
            if np.shape(r) != (system.sizes[i],):
                raise DimensionError(f"rhs block {i} has shape {np.shape(r)}")
        b = np.concatenate([np.asarray(r, dtype=float) for r in system.rhs])
    return A, b
