"""Matrix-free operator contract: algorithms only ever call ``apply``."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class LinearOperator:
    """Square operator of dimension ``n`` known through its action.

    Parameters
    ----------
    n : int
    apply : callable
        ``x -> A x`` for a length-``n`` vector.
    apply_adjoint : callable, optional
        ``x -> A^H x``.
    dtype : numpy dtype of the operator's entries.
    """

    def __init__(self, n, apply, apply_adjoint=None, dtype=float):
        self.n = int(n)
        self._apply = apply
        self._apply_adjoint = apply_adjoint
        self.dtype = np.dtype(dtype)

    @property
    def shape(self):
        return (self.n, self.n)

    def apply(self, x):
        return self._apply(x)

    def apply_adjoint(self, x):
        if self._apply_adjoint is None:
            raise NotImplementedError("operator has no adjoint")
        return self._apply_adjoint(x)

    def __matmul__(self, x):
        x = np.asarray(x)
        if x.ndim == 1:
            return self.apply(x)
        return np.column_stack([self.apply(x[:, j]) for j in range(x.shape[1])])


class DenseOperator(LinearOperator):
    def __init__(self, M):
        M = np.asarray(M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("operator matrix must be square")
        self.matrix = M
        super().__init__(M.shape[0], lambda x: M @ x, lambda x: M.conj().T @ x, M.dtype)


class SparseOperator(LinearOperator):
    """CSR-backed operator (used for Matrix Market input and Laplacians)."""

    def __init__(self, M):
        M = sp.csr_matrix(M)
        if M.shape[0] != M.shape[1]:
            raise ValueError("operator matrix must be square")
        self.matrix = M
        MH = M.conj().T.tocsr()
        super().__init__(M.shape[0], lambda x: M @ x, lambda x: MH @ x, M.dtype)

    @property
    def nnz(self):
        return self.matrix.nnz


def aslinearoperator(A):
    if isinstance(A, LinearOperator):
        return A
    if sp.issparse(A):
        return SparseOperator(A)
    return DenseOperator(A)


def to_dense(A):
    """Materialize an operator by applying it to every unit vector."""
    A = aslinearoperator(A)
    if isinstance(A, DenseOperator):
        return A.matrix.copy()
    cols = []
    dtype = A.dtype
    for j in range(A.n):
        e = np.zeros(A.n, dtype=dtype)
        e[j] = 1
        cols.append(A.apply(e))
    return np.column_stack(cols)
