"""Similarity-restoring correction of randomized Krylov decompositions.

Given ``A U = U H + h u c^H`` with an Omega-orthonormal (hence well
conditioned, but not orthonormal) ``U``, one least-squares solve
``hhat = U^+ u`` yields

    A U = U (H + hhat c^H) + (u - U hhat) c^H,    U^H (u - U hhat) = 0,

and the new projected matrix is similar to the one standard Arnoldi would
have produced for the same subspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.linalg import blas

from .errors import (
    IllConditionedBasis,
    NotPositiveDefinite,
    RankDeficientBasis,
    SingularProjectedMatrix,
)
from .krylov import KrylovDecomposition, OrthonormalKrylovDecomposition
from .linalg import cholesky, householder_qr, lsqr

__all__ = [
    "CorrectionSolver",
    "SolverReport",
    "CorrectedKrylovDecomposition",
    "gram_matrix",
    "correct",
    "associated_orthonormal",
    "fom_solve",
]


@dataclass(frozen=True)
class CorrectionSolver:
    """How to solve ``min ||U h - u||``: ``'cholesky'`` (Gram matrix) or ``'lsqr'``."""

    method: str = "cholesky"
    tol: float = 1e-12
    maxit: Optional[int] = None

    def __post_init__(self):
        if self.method not in ("cholesky", "lsqr"):
            raise ValueError(f"unknown correction solver {self.method!r}")
        if self.method == "lsqr" and not 0 < self.tol < 1:
            raise ValueError("LSQR tolerance must lie in (0, 1)")

    @classmethod
    def cholesky(cls):
        return cls("cholesky")

    @classmethod
    def lsqr(cls, tol=1e-12, maxit=None):
        return cls("lsqr", tol, maxit)

    @property
    def tol_orth(self):
        """Orthogonality level the solver can certify for ``U^H uhat``."""
        if self.method == "cholesky":
            return 1e-10
        return max(1e-10, 10 * self.tol)

    @property
    def label(self):
        return "cholesky" if self.method == "cholesky" else f"lsqr({self.tol:g})"


@dataclass
class SolverReport:
    method: str
    iterations: int
    residual: float
    converged: bool = True


@dataclass
class CorrectedKrylovDecomposition:
    """``A U = U Hhat + uhat c^H`` with ``U^H uhat = 0``."""

    U: np.ndarray
    Hhat: np.ndarray
    uhat: np.ndarray
    c: np.ndarray
    correction: np.ndarray
    solver_report: SolverReport
    beta: Optional[float] = None
    gram: Optional[np.ndarray] = field(default=None, repr=False)
    sketch: object = field(default=None, repr=False)
    SU: Optional[np.ndarray] = field(default=None, repr=False)
    s_uhat: Optional[np.ndarray] = field(default=None, repr=False)
    tol_orth: float = 1e-10

    @property
    def order(self):
        return self.U.shape[1]

    # the generic Krylov-decomposition attribute names
    @property
    def H(self):
        return self.Hhat

    @property
    def next(self):
        return self.uhat

    def residual(self, A):
        from .operators import aslinearoperator

        A = aslinearoperator(A)
        R = A @ self.U - self.U @ self.Hhat - np.outer(self.uhat, self.c.conj())
        return float(np.linalg.norm(R))

    def orthogonality(self):
        """``||U^H uhat|| / (||U|| ||uhat||)``."""
        num = np.linalg.norm(self.U.conj().T @ self.uhat)
        den = np.linalg.norm(self.U, 2) * np.linalg.norm(self.uhat)
        return float(num / den) if den else 0.0


def gram_matrix(U):
    """``U^H U`` computed from its upper triangle only (BLAS syrk/herk)."""
    U = np.asarray(U)
    if U.shape[1] == 0:
        return np.zeros((0, 0), dtype=U.dtype)
    if np.iscomplexobj(U):
        Gu = blas.zherk(1.0, U, trans=2)
    else:
        Gu = blas.dsyrk(1.0, np.asarray(U, dtype=float), trans=1)
    G = np.triu(Gu)
    return G + np.triu(G, 1).conj().T


def correct(dec: KrylovDecomposition, solver: Optional[CorrectionSolver] = None,
            counters=None) -> CorrectedKrylovDecomposition:
    """Turn a randomized Krylov decomposition into one with orthogonal residual.

    ``dec`` is left untouched.  Raises :class:`IllConditionedBasis` if the
    Gram matrix of the basis is numerically singular.
    """
    solver = solver or CorrectionSolver()
    U = dec.U
    u = dec.next
    n, m = U.shape
    gram = None
    if solver.method == "cholesky":
        gram = gram_matrix(U)
        rhs = U.conj().T @ u
        try:
            L = cholesky(gram)
        except NotPositiveDefinite as exc:
            raise IllConditionedBasis(
                f"{exc}; rebuild the basis with a larger sketch dimension") from exc
        y = sla.solve_triangular(L, rhs, lower=True)
        hhat = sla.solve_triangular(L, y, lower=True, trans="C")
        report = SolverReport("cholesky", 0, np.nan)
        if counters is not None:
            gflops = m * (m + 1) * n
            cflops = m ** 3 / 3.0
            counters.gram_flops += gflops
            counters.cholesky_flops += cflops
            counters.inner_products += m * (m + 1) // 2 + m
            counters.vector_updates += m
            counters.correction_flops += gflops + cflops + 4 * m * n + 2 * m * m
    else:
        res = lsqr(U, u, tol=solver.tol, maxit=solver.maxit, counters=counters)
        hhat = res.x
        report = SolverReport("lsqr", res.iterations, res.rnorm, res.converged)
        if counters is not None:
            counters.inner_products += 2 * res.iterations * m
            counters.vector_updates += m
            counters.correction_flops += 4 * m * n * res.iterations + 2 * m * n
    uhat = u - U @ hhat
    if solver.method == "cholesky":
        report.residual = float(np.linalg.norm(uhat))
    Hhat = dec.H + np.outer(hhat, dec.c.conj())
    if counters is not None:
        counters.corrections += 1

    sketch = getattr(dec, "sketch", None)
    SU = s_uhat = None
    if sketch is not None:
        SU = dec.SU
        s_uhat = dec.s_next - SU @ hhat
    return CorrectedKrylovDecomposition(
        U=U, Hhat=Hhat, uhat=uhat, c=dec.c.copy(), correction=hhat,
        solver_report=report, beta=dec.beta, gram=gram, sketch=sketch, SU=SU,
        s_uhat=s_uhat, tol_orth=solver.tol_orth)


def associated_orthonormal(cor: CorrectedKrylovDecomposition) -> OrthonormalKrylovDecomposition:
    """Orthonormal Krylov decomposition ``A Q = Q G + uhat chat^H`` on ``range(U)``.

    ``Q R = U`` (Householder), ``G = R Hhat R^{-1}``, ``chat = R^{-H} c``.
    """
    Q, R = householder_qr(cor.U)
    d = np.abs(np.diag(R))
    if d.size and d.min() <= 1e-14 * d.max():
        raise RankDeficientBasis("basis U is numerically rank deficient")
    G = sla.solve_triangular(R, (R @ cor.Hhat).T, trans="T").T
    chat = sla.solve_triangular(R, cor.c, trans="C")
    return OrthonormalKrylovDecomposition(Q, G, cor.uhat, chat, beta=cor.beta)


def fom_solve(cor: CorrectedKrylovDecomposition, beta=None):
    """FOM iterate ``x = beta U Hhat^{-1} e_1`` (Galerkin on ``range(U)``).

    ``beta`` is the scale with ``u_1 = b / beta``; defaults to the one stored
    on the decomposition.
    """
    beta = cor.beta if beta is None else beta
    m = cor.order
    rhs = np.zeros(m, dtype=np.result_type(cor.Hhat, float))
    rhs[0] = beta
    try:
        lu, piv = sla.lu_factor(cor.Hhat, check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise SingularProjectedMatrix(str(exc)) from exc
    if np.any(np.abs(np.diag(lu)) <= np.finfo(float).eps * np.abs(cor.Hhat).max()):
        raise SingularProjectedMatrix("projected matrix is singular; try another m")
    y = sla.lu_solve((lu, piv), rhs)
    return cor.U @ y
