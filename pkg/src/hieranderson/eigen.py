"""Dense symmetric eigensolver: Householder tridiagonalization + implicit QL.

Deterministic, self-contained, O(N^3); adequate for the dense volumes used
here (N <= 4096).  Eigenvalues are returned nondecreasing.  The iteration
cap is per eigenvalue; hitting it raises instead of silently truncating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend

__all__ = ["EigenSystem", "EigenError", "symmetric_eigen", "eigen_rows", "tridiag_eigvals"]

DEFAULT_MAX_ITER = 64


class EigenError(RuntimeError):
    """QL iteration failed to converge within the iteration cap."""


@dataclass(frozen=True)
class EigenSystem:
    """Spectral decomposition of a real symmetric matrix.

    values are nondecreasing; vectors, when kept, holds orthonormal
    eigenvector columns aligned with values.  residual_sup is
    max_i ||H v_i - values_i v_i||_inf, None when vectors were not kept.
    """

    values: np.ndarray
    vectors: np.ndarray | None = None
    residual_sup: float | None = None

    def resolvent_diag(self, z: complex) -> np.ndarray:
        """Diagonal of (H - z)^(-1) from the eigendecomposition; needs vectors."""
        if self.vectors is None:
            raise ValueError("resolvent diagonal requires eigenvectors")
        if z.imag == 0.0:
            raise ValueError("spectral parameter must have nonzero imaginary part")
        return (self.vectors**2) @ (1.0 / (self.values - z))

    def resolvent_entry(self, x: int, y: int, z: complex) -> complex:
        if self.vectors is None:
            raise ValueError("resolvent entries require eigenvectors")
        if z.imag == 0.0:
            raise ValueError("spectral parameter must have nonzero imaginary part")
        return np.sum(self.vectors[x] * self.vectors[y] / (self.values - z))


def _as_matrix(H) -> np.ndarray:
    M = getattr(H, "matrix", H)
    A = np.array(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.array_equal(A, A.T):
        raise ValueError("matrix is not symmetric")
    return A


def symmetric_eigen(H, want_vectors: bool = False, max_iter: int = DEFAULT_MAX_ITER) -> EigenSystem:
    """Full spectrum (and optionally the orthonormal eigenbasis) of H.

    H may be a Hamiltonian or a plain symmetric ndarray.  Output ordering is
    deterministic: eigenvalues ascending, ties broken by iteration order.
    """
    A = _as_matrix(H)
    n = A.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    hmax = float(np.max(np.abs(A))) if n else 0.0
    orig = A.copy() if want_vectors else None
    d, e, qt = backend.tridiagonalize(A, want_vectors)
    vt = qt if want_vectors else np.zeros((0, 0))
    status = backend.ql_tridiag(d, e, vt, want_vectors, max_iter)
    if status < 0:
        raise EigenError(f"QL failed to converge within {max_iter} iterations per eigenvalue")
    order = np.argsort(d, kind="stable")
    values = d[order]
    if not want_vectors:
        return EigenSystem(values=values)
    vectors = vt[order].T.copy()
    resid = float(np.max(np.abs(orig @ vectors - vectors * values[None, :])))
    return EigenSystem(values=values, vectors=vectors, residual_sup=resid)


def eigen_rows(A: np.ndarray, rows: np.ndarray, max_iter: int = DEFAULT_MAX_ITER):
    """Eigenvalues plus selected eigenvector rows of symmetric A.

    Returns (values, vrows) with vrows[j, i] = i-th eigenvector evaluated at
    site rows[j].  Accumulating rotations only on the requested rows makes
    resolvent sampling at a few sites much cheaper than a full eigenbasis.
    """
    A = np.array(A, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.int64)
    d, e, qt = backend.tridiagonalize(A, True)
    vt = np.ascontiguousarray(qt[:, rows])
    status = backend.ql_tridiag(d, e, vt, True, max_iter)
    if status < 0:
        raise EigenError(f"QL failed to converge within {max_iter} iterations per eigenvalue")
    order = np.argsort(d, kind="stable")
    return d[order], vt[order].T.copy()


def tridiag_eigvals(diag: np.ndarray, off: np.ndarray, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Sorted eigenvalues of the symmetric tridiagonal (diag, off)."""
    n = len(diag)
    d = np.array(diag, dtype=np.float64)
    e = np.zeros(n, dtype=np.float64)
    e[: n - 1] = off
    status = backend.ql_tridiag(d, e, np.zeros((0, 0)), False, max_iter)
    if status < 0:
        raise EigenError(f"QL failed to converge within {max_iter} iterations per eigenvalue")
    return np.sort(d)
