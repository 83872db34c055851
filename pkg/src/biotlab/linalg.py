"""Sparse storage, reusable direct factorizations and dense symmetric eigensolvers.

The heavy lifting is delegated to SuperLU (through scipy) and LAPACK.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NotSPD, SingularMatrix, TooLarge

DENSE_LIMIT = 2000


def csr(A) -> sp.csr_matrix:
    """CSR copy with summed duplicates and sorted column indices."""
    M = sp.csr_matrix(A, dtype=float, copy=True)
    M.sum_duplicates()
    M.sort_indices()
    return M


class Factorization:
    """Sparse LU of a square matrix, reusable for many right-hand sides.

    Rows and columns are equilibrated before factoring, so the pivot test
    below is scale free.
    """

    PIVOT_TOL = 1e-13

    def __init__(self, A):
        self.A = csr(A)
        if self.A.shape[0] != self.A.shape[1]:
            raise ValueError(f"matrix must be square, got {self.A.shape}")
        n = self.A.shape[0]
        self._lu = None
        if n == 0:
            return
        absA = abs(self.A)
        r = absA.max(axis=1).toarray().ravel()
        if np.any(r == 0):
            raise SingularMatrix("matrix has an empty row", int(np.flatnonzero(r == 0)[0]))
        self._r = 1.0 / r
        c = abs(sp.diags(self._r) @ self.A).max(axis=0).toarray().ravel()
        if np.any(c == 0):
            raise SingularMatrix("matrix has an empty column", int(np.flatnonzero(c == 0)[0]))
        self._c = 1.0 / c
        scaled = (sp.diags(self._r) @ self.A @ sp.diags(self._c)).tocsc()
        try:
            self._lu = spla.splu(scaled, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SingularMatrix(f"sparse LU failed: {exc}", _first_zero_pivot(scaled)) from None
        d = np.abs(self._lu.U.diagonal())
        if not np.all(np.isfinite(d)) or d.min() <= self.PIVOT_TOL:
            k = int(np.argmin(d))
            raise SingularMatrix(
                f"numerically singular matrix (scaled pivot {k} = {d[k]:.3e})",
                int(self._lu.perm_c[k]),
            )

    @property
    def shape(self):
        return self.A.shape

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self._lu is None:
            return b.copy()
        if b.ndim == 1:
            return self._c * self._lu.solve(self._r * b)
        return self._c[:, None] * self._lu.solve(self._r[:, None] * b)


def _first_zero_pivot(A) -> int | None:
    """Locate a failing pivot with dense partial pivoting (small systems only)."""
    if A.shape[0] > DENSE_LIMIT:
        return None
    _, _, U = sla.lu(A.toarray())
    d = np.abs(np.diag(U))
    bad = np.flatnonzero(d <= 1e-14 * max(d.max(initial=0.0), 1.0))
    return int(bad[0]) if bad.size else None


def factor(A) -> Factorization:
    return Factorization(A)


def generalized_symmetric_eig(S, G, limit: int = DENSE_LIMIT, vectors: bool = False):
    """Eigenvalues (ascending) of S x = lambda G x with G SPD."""
    S = S.toarray() if sp.issparse(S) else np.asarray(S, dtype=float)
    G = G.toarray() if sp.issparse(G) else np.asarray(G, dtype=float)
    n = S.shape[0]
    if S.shape != (n, n) or G.shape != (n, n):
        raise ValueError("S and G must be square of equal size")
    if n > limit:
        raise TooLarge(f"dense eigenproblem of size {n} exceeds the limit {limit}")
    S = (S + S.T) / 2
    G = (G + G.T) / 2
    try:
        sla.cholesky(G, lower=True)
    except sla.LinAlgError:
        raise NotSPD("right-hand matrix is not positive definite") from None
    if vectors:
        return sla.eigh(S, G)
    return sla.eigh(S, G, eigvals_only=True)
