"""Sparse direct solves for complex symmetric and saddle-point systems.

Backed by SuperLU (threshold partial pivoting, COLAMD ordering), which copes
with the zero multiplier blocks of the equilibration problems.  Complex
arithmetic stays native.
"""

from __future__ import annotations

import re

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack
from scipy.sparse.linalg import splu

from .errors import InvalidArgumentError, SingularSystemError

RESIDUAL_TOL = 1e-10
_DENSE_PIVOT_LIMIT = 3000


def _find_pivot(A):
    """Best-effort index of the offending pivot of a singular matrix."""
    A = sp.csr_matrix(A)
    row_nnz = np.diff(A.indptr)
    if np.any(row_nnz == 0):
        return int(np.flatnonzero(row_nnz == 0)[0])
    col_nnz = np.diff(A.tocsc().indptr)
    if np.any(col_nnz == 0):
        return int(np.flatnonzero(col_nnz == 0)[0])
    if A.shape[0] <= _DENSE_PIVOT_LIMIT:
        _, _, info = lapack.zgetrf(A.toarray().astype(complex))
        if info > 0:
            return int(info - 1)
    return None


class Factorization:
    """Reusable LU factors of one matrix."""

    def __init__(self, A):
        A = sp.csc_matrix(A, dtype=complex)
        if A.shape[0] != A.shape[1]:
            raise InvalidArgumentError("system matrix must be square")
        self.A = A
        if A.shape[0] == 0:
            self._lu = None
            return
        try:
            self._lu = splu(A, permc_spec="COLAMD", options=dict(Equil=True))
        except RuntimeError as exc:
            pivot = _find_pivot(A)
            if pivot is None:
                m = re.search(r"(\d+)", str(exc))
                pivot = int(m.group(1)) if m else None
            raise SingularSystemError(f"sparse LU failed: {exc}", pivot=pivot) from exc
        # SuperLU does not always flag tiny pivots
        diag = np.abs(self._lu.U.diagonal())
        if not np.all(np.isfinite(diag)) or diag.min() == 0.0:
            raise SingularSystemError("zero pivot in sparse LU",
                                      pivot=int(np.argmin(diag)))

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        if self._lu is None:
            return np.zeros(0, dtype=complex)
        x = self._lu.solve(b)
        scale = _norm_inf(self.A) * np.max(np.abs(x), initial=0.0) + np.max(np.abs(b), initial=0.0)
        for _ in range(3):
            r = b - self.A @ x
            if np.max(np.abs(r), initial=0.0) <= RESIDUAL_TOL * scale:
                return x
            x = x + self._lu.solve(r)
        r = b - self.A @ x
        if np.max(np.abs(r), initial=0.0) > RESIDUAL_TOL * scale:
            raise SingularSystemError("residual bound not met; system is numerically singular")
        return x


def _norm_inf(A):
    return float(np.max(np.asarray(abs(A).sum(axis=1)).ravel(), initial=0.0))


def solve_matrix(A, b):
    return Factorization(A).solve(b)


def solve(system):
    """Solve a :class:`~eddymsfem.assembly.SparseSystem`; returns the full DOF vector."""
    x = solve_matrix(system.matrix, system.rhs)
    return system.expand(x)
