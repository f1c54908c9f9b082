"""Sparse CSR construction and direct solvers for the discrete systems."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-10


class LinearSolveError(RuntimeError):
    """Raised when a factorization fails or a solve misses the residual tolerance."""


@dataclass
class LinearSolveReport:
    label: str
    size: int
    nnz: int
    relative_residual: float
    factor_seconds: float
    solve_seconds: float


def from_triplets(n_rows: int, n_cols: int, rows, cols, vals) -> sp.csr_matrix:
    """Canonical CSR from triplets; duplicate entries are summed."""
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
        raise IndexError("row index out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
        raise IndexError("column index out of range")
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


class SparseFactor:
    """LU factorization of a sparse square matrix, reusable across many solves.

    Every solve verifies the relative residual against ``RESIDUAL_TOL`` so a
    nearly singular system is reported instead of silently polluting a run.
    """

    def __init__(self, A: sp.spmatrix, label: str = "system"):
        A = A.tocsc()
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"{label}: matrix must be square")
        self.A = A
        self.label = label
        self.size = A.shape[0]
        self.nnz = A.nnz
        t0 = time.perf_counter()
        try:
            self._lu = spla.splu(A)
        except RuntimeError as exc:  # singular to working precision
            raise LinearSolveError(f"{label}: factorization failed: {exc}") from exc
        self.factor_seconds = time.perf_counter() - t0

    def solve(self, b: np.ndarray, check: bool = True) -> np.ndarray:
        x = self._lu.solve(b)
        if check:
            bnorm = np.linalg.norm(b)
            if bnorm > 0.0:
                res = np.linalg.norm(self.A @ x - b) / bnorm
                if not res <= RESIDUAL_TOL:
                    raise LinearSolveError(
                        f"{self.label}: relative residual {res:.3e} exceeds "
                        f"{RESIDUAL_TOL:.0e}"
                    )
        return x


def solve(A: sp.spmatrix, b: np.ndarray, label: str = "system"):
    """Direct solve returning (x, LinearSolveReport)."""
    factor = SparseFactor(A, label=label)
    t0 = time.perf_counter()
    x = factor.solve(b, check=False)
    solve_seconds = time.perf_counter() - t0
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b) / bnorm if bnorm > 0.0 else 0.0
    if not res <= RESIDUAL_TOL:
        raise LinearSolveError(
            f"{label}: relative residual {res:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )
    report = LinearSolveReport(
        label=label,
        size=factor.size,
        nnz=factor.nnz,
        relative_residual=float(res),
        factor_seconds=factor.factor_seconds,
        solve_seconds=solve_seconds,
    )
    return x, report


def is_symmetric(A: sp.spmatrix, tol: float = 1e-12) -> bool:
    """Entrywise symmetry check relative to the largest entry."""
    diff = abs(A - A.T)
    scale = max(1.0, abs(A).max() if A.nnz else 0.0)
    return diff.nnz == 0 or diff.max() <= tol * scale
