"""Sparse direct (and optional preconditioned Krylov) solves for complex systems."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

__all__ = ["SolveReport", "SolverError", "SingularMatrixError", "solve",
           "write_matrix", "read_matrix"]

log = logging.getLogger(__name__)

DEFAULT_ORDERING = "MMD_AT_PLUS_A"
# the WG matrices are structurally symmetric with a dominant diagonal block;
# symmetric-mode pivoting keeps the fill of the A + A^T ordering
DIAG_PIVOT_THRESHOLD = 0.1
ITERATIVE_THRESHOLD = 500_000
DENSE_DIAGNOSIS_LIMIT = 3000


class SolverError(RuntimeError):
    """Solve failed; ``residual`` holds the last relative residual if known."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SingularMatrixError(SolverError):
    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


@dataclass
class SolveReport:
    residual: float
    method: str
    seconds: float
    n: int
    nnz: int
    fill_nnz: int | None = None
    iterations: int = 0
    refinement_steps: int = 0
    ordering: str | None = None
    perm_c: np.ndarray | None = field(default=None, repr=False)
    perm_r: np.ndarray | None = field(default=None, repr=False)


def _relative_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return float(r / nb) if nb > 0 else float(r)


def _locate_zero_pivot(A) -> int | None:
    """Dense LU diagnosis for small matrices; returns the first (near) zero pivot."""
    if A.shape[0] > DENSE_DIAGNOSIS_LIMIT:
        return None
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = la.lu_factor(A.toarray(), check_finite=False)
    d = np.abs(np.diag(lu))
    scale = max(d.max(), 1.0) if d.size else 1.0
    small = np.flatnonzero(d <= A.shape[0] * np.finfo(float).eps * scale)
    return int(small[0]) if small.size else None


def _direct(A, b, ordering: str, report_kwargs: dict):
    try:
        opts = {}
        if ordering == "MMD_AT_PLUS_A":
            opts = dict(diag_pivot_thresh=DIAG_PIVOT_THRESHOLD,
                        options=dict(SymmetricMode=True))
        lu = sla.splu(A.tocsc(), permc_spec=ordering, **opts)
    except RuntimeError as exc:
        pivot = _locate_zero_pivot(A)
        where = f" at pivot {pivot}" if pivot is not None else ""
        raise SingularMatrixError(f"matrix is singular{where}: {exc}", pivot) from exc
    diag = np.abs(lu.U.diagonal())
    tiny = np.flatnonzero(diag <= A.shape[0] * np.finfo(float).eps * diag.max())
    if tiny.size:
        col = int(lu.perm_c[tiny[0]]) if lu.perm_c is not None else int(tiny[0])
        raise SingularMatrixError(
            f"matrix is numerically rank deficient: pivot {int(tiny[0])} "
            f"(column {col}) is {diag[tiny[0]]:.3e}", int(tiny[0]))
    x = lu.solve(b)
    report_kwargs.update(fill_nnz=int(lu.L.nnz + lu.U.nnz), ordering=ordering,
                         perm_c=np.array(lu.perm_c), perm_r=np.array(lu.perm_r))
    return x, lu.solve


def _iterative(A, b, tol: float, report_kwargs: dict, maxiter: int = 2000):
    A = A.tocsc()
    ilu = sla.spilu(A, drop_tol=1e-5, fill_factor=20)
    M = sla.LinearOperator(A.shape, ilu.solve, dtype=complex)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = sla.gmres(A, b, M=M, rtol=tol * 0.1, atol=0.0, restart=200,
                        maxiter=maxiter, callback=cb, callback_type="pr_norm")
    report_kwargs.update(iterations=count[0], ordering="ilu")
    if info != 0:
        res = _relative_residual(A, x, b)
        raise SolverError(f"GMRES did not converge (info={info}), "
                          f"relative residual {res:.3e}", res)
    return x, ilu.solve


def solve(A, b, method: str = "direct", tol: float = 1e-10,
          ordering: str = DEFAULT_ORDERING,
          iterative_threshold: int = ITERATIVE_THRESHOLD,
          max_refinement: int = 3) -> tuple[np.ndarray, SolveReport]:
    """Solve ``A x = b``.

    ``method`` is ``"direct"`` (sparse LU with a fill-reducing column
    ordering), ``"iterative"`` (ILU-preconditioned GMRES) or ``"auto"``
    (iterative above ``iterative_threshold`` unknowns). The returned report's
    residual is recomputed from ``x``; a few steps of iterative refinement are
    taken if it exceeds ``tol``.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b)
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")
    dtype = np.result_type(A.dtype, b.dtype, np.float64)
    A = A.astype(dtype)
    b = b.astype(dtype)
    if method == "auto":
        method = "iterative" if n > iterative_threshold else "direct"
    if method not in ("direct", "iterative"):
        raise ValueError(f"unknown solve method {method!r}")

    t0 = time.perf_counter()
    extra: dict = {}
    if method == "direct":
        x, apply_inverse = _direct(A, b, ordering, extra)
    else:
        x, apply_inverse = _iterative(A, b, tol, extra)

    res = _relative_residual(A, x, b)
    steps = 0
    while res > tol and steps < max_refinement and method == "direct":
        x = x + apply_inverse(b - A @ x)
        res = _relative_residual(A, x, b)
        steps += 1
    seconds = time.perf_counter() - t0
    report = SolveReport(residual=res, method=method, seconds=seconds, n=n,
                         nnz=int(A.nnz), refinement_steps=steps, **extra)
    log.debug("solve n=%d method=%s residual=%.2e time=%.2fs", n, method, res, seconds)
    if res > tol:
        raise SolverError(f"relative residual {res:.3e} exceeds tolerance {tol:.1e}", res)
    return x, report


def write_matrix(A, path) -> None:
    """Coordinate text dump: ``row col re im`` per line, 1-based indices."""
    C = sp.coo_matrix(A)
    with open(path, "w") as fh:
        fh.write(f"{C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for i, j, v in zip(C.row, C.col, C.data.astype(complex)):
            fh.write(f"{i + 1} {j + 1} {v.real:.17g} {v.imag:.17g}\n")


def read_matrix(path) -> sp.csr_matrix:
    with open(path) as fh:
        nr, nc, nnz = (int(t) for t in fh.readline().split())
        if nnz == 0:
            return sp.csr_matrix((nr, nc), dtype=complex)
        data = np.loadtxt(fh, ndmin=2)
    vals = data[:, 2] + 1j * data[:, 3]
    return sp.coo_matrix((vals, (data[:, 0].astype(int) - 1, data[:, 1].astype(int) - 1)),
                         shape=(nr, nc)).tocsr()
