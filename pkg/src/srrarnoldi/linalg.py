"""Small dense kernels: QR, Cholesky, ordered complex Schur, Parlett, LSQR.

Everything here works on the small projected matrices (m x m, m in the
tens or hundreds) or on tall skinny bases.  Schur-related routines always
work in complex arithmetic so that reordering only ever swaps 1x1 blocks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DomainError,
    NoConvergence,
    NotPositiveDefinite,
    SingularDivisor,
)

__all__ = [
    "householder_qr",
    "cholesky",
    "SchurForm",
    "schur",
    "rank_eigenvalues",
    "triangular_function",
    "lsqr",
    "LsqrResult",
    "svd_small",
]

EPS = np.finfo(float).eps
UNIT_ROUNDOFF = EPS / 2


def householder_qr(M):
    """Thin Householder QR with a real nonnegative diagonal in ``R``.

    Parameters
    ----------
    M : (p, q) array_like with p >= q

    Returns
    -------
    Q : (p, q) ndarray with orthonormal columns
    R : (q, q) upper triangular ndarray, ``R[j, j] >= 0``

    A rank-deficient column shows up as a zero on the diagonal of ``R``; it
    is not an error here.
    """
    A = np.array(M, copy=True)
    if not np.issubdtype(A.dtype, np.inexact):
        A = A.astype(float)
    p, q = A.shape
    if p < q:
        raise ValueError(f"householder_qr needs rows >= cols, got {A.shape}")
    vs = []
    for j in range(q):
        x = A[j:, j]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            vs.append(None)
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        A[j:, j:] -= 2.0 * np.outer(v, v.conj() @ A[j:, j:])
        vs.append(v)
    R = np.triu(A[:q, :])
    Q = np.eye(p, q, dtype=A.dtype)
    for j in reversed(range(q)):
        v = vs[j]
        if v is None:
            continue
        Q[j:, :] -= 2.0 * np.outer(v, v.conj() @ Q[j:, :])
    # sign convention: make diag(R) real and nonnegative
    d = np.diag(R).copy()
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1), 1)
    R = phase.conj()[:, None] * R
    Q = Q * phase[None, :]
    R[np.diag_indices(q)] = mag
    return Q, R


def cholesky(G, tol=None):
    """Lower Cholesky factor of a Hermitian positive definite matrix.

    The input is symmetrized as ``(G + G^H)/2`` first.  A pivot at or below
    ``tol`` (default ``m * u * trace(G)``) raises :class:`NotPositiveDefinite`.
    """
    G = np.asarray(G)
    G = 0.5 * (G + G.conj().T)
    m = G.shape[0]
    if tol is None:
        tol = m * UNIT_ROUNDOFF * abs(np.trace(G).real)
    L = np.zeros_like(G)
    for j in range(m):
        row = L[j, :j]
        pivot = G[j, j].real - np.vdot(row, row).real
        if not pivot > tol:
            raise NotPositiveDefinite(
                f"Cholesky pivot {pivot:.3e} at column {j} is below threshold {tol:.3e}"
            )
        ljj = np.sqrt(pivot)
        L[j, j] = ljj
        if j + 1 < m:
            L[j + 1:, j] = (G[j + 1:, j] - L[j + 1:, :j] @ row.conj()) / ljj
    return L


@dataclass
class SchurForm:
    """Ordered complex Schur form ``H V = V S``.

    The first ``selected`` diagonal entries of ``S`` are the wanted
    eigenvalues, in rank order.
    """

    V: np.ndarray
    S: np.ndarray
    selected: int = 0

    @property
    def eigenvalues(self):
        return np.diag(self.S).copy()

    @property
    def V_sel(self):
        return self.V[:, :self.selected]

    @property
    def S_sel(self):
        return self.S[:self.selected, :self.selected]


_WHICH_KEYS = {
    "LM": np.abs,
    "SM": lambda z: -np.abs(z),
    "LR": np.real,
    "SR": lambda z: -np.real(z),
    "LI": np.imag,
    "SI": lambda z: -np.imag(z),
}
_WHICH_ALIASES = {
    "largest-magnitude": "LM",
    "smallest-magnitude": "SM",
    "largest-real": "LR",
    "smallest-real": "SR",
}


def selection_key(which):
    """Return a vectorized key function; larger keys rank first."""
    if callable(which):
        return which
    which = _WHICH_ALIASES.get(which, which)
    try:
        return _WHICH_KEYS[which]
    except KeyError:
        raise ValueError(f"unknown eigenvalue selection {which!r}") from None


def rank_eigenvalues(values, which="LM"):
    """Indices of ``values`` sorted by decreasing key, ties broken by index."""
    keys = np.asarray(selection_key(which)(np.asarray(values)), dtype=float)
    return np.argsort(-keys, kind="stable")


def _swap_adjacent(S, V, k):
    """Swap diagonal entries k and k+1 of upper-triangular S by a Givens rotation."""
    a, c = S[k, k], S[k + 1, k + 1]
    x = np.array([S[k, k + 1], c - a])
    # hypot, not norm: squaring tiny entries underflows
    nrm = np.hypot(abs(x[0]), abs(x[1]))
    if nrm == 0.0:
        return
    x /= nrm
    Z = np.array([[x[0], -np.conj(x[1])], [x[1], np.conj(x[0])]])
    idx = [k, k + 1]
    S[:, idx] = S[:, idx] @ Z
    S[idx, :] = Z.conj().T @ S[idx, :]
    V[:, idx] = V[:, idx] @ Z
    S[k + 1, k] = 0.0
    S[k, k], S[k + 1, k + 1] = c, a


def schur(H, which="LM", ell=0):
    """Complex Schur form of ``H`` with ``ell`` ranked eigenvalues in front.

    ``which`` is one of ``'LM'``, ``'SM'``, ``'LR'``, ``'SR'``, ``'LI'``,
    ``'SI'`` or a callable mapping eigenvalues to sort keys (larger first).
    The leading ``ell`` diagonal entries of ``S`` come out in rank order.
    """
    H = np.asarray(H)
    m = H.shape[0]
    if H.shape != (m, m):
        raise ValueError("schur needs a square matrix")
    if not 0 <= ell <= m:
        raise ValueError(f"ell={ell} outside [0, {m}]")
    if m == 0:
        return SchurForm(np.zeros((0, 0), complex), np.zeros((0, 0), complex), 0)
    try:
        S, V = sla.schur(H.astype(complex), output="complex")
    except (sla.LinAlgError, ValueError) as exc:
        if np.iscomplexobj(H):
            raise NoConvergence(f"shifted QR failed: {exc}") from exc
        # zgees occasionally stalls where the real QR iteration does not
        try:
            S, V = sla.rsf2csf(*sla.schur(H, output="real"))
        except (sla.LinAlgError, ValueError) as exc2:
            raise NoConvergence(f"shifted QR failed: {exc2}") from exc2
    if ell:
        order = rank_eigenvalues(np.diag(S), which)[:ell]
        # ids[p] = original position of the eigenvalue now sitting at p
        ids = list(range(m))
        for target, want in enumerate(order):
            pos = ids.index(want)
            for k in range(pos - 1, target - 1, -1):
                _swap_adjacent(S, V, k)
                ids[k], ids[k + 1] = ids[k + 1], ids[k]
    return SchurForm(V=V, S=np.triu(S), selected=ell)


def _as_evaluator(f):
    evaluator = getattr(f, "evaluator", f)
    domain = getattr(f, "domain", None)
    return evaluator, domain


def triangular_function(T, f, perturb=True):
    """Evaluate ``f(T)`` for upper-triangular ``T`` by the Parlett recurrence.

    ``f`` is a vectorized callable or a :class:`~srrarnoldi.matfun.ScalarFunction`.
    Diagonal entries closer than ``1e-8 * ||T||_F`` are pulled apart by
    perturbing the later one (with a warning) unless ``perturb`` is False, in
    which case :class:`SingularDivisor` is raised.
    """
    T = np.array(T, dtype=complex)
    m = T.shape[0]
    evaluator, domain = _as_evaluator(f)
    t = np.diag(T).copy()
    if domain is not None and not np.all(domain(t)):
        bad = t[~np.asarray(domain(t), bool)]
        raise DomainError(f"function undefined at eigenvalue(s) {bad[:3]}")

    if not np.any(np.triu(T, 1)):
        # diagonal input: no recurrence, so repeated entries are harmless
        with np.errstate(all="ignore"):
            fd = np.broadcast_to(np.asarray(evaluator(t), dtype=complex), t.shape)
        if not np.all(np.isfinite(fd)):
            raise DomainError("function is not finite at some eigenvalue")
        return np.diag(fd)

    delta = 1e-8 * np.linalg.norm(T)
    if m > 1 and delta > 0:
        gaps = np.abs(t[:, None] - t[None, :])
        close = np.triu(gaps < delta, 1)
        if close.any():
            if not perturb:
                i, j = np.argwhere(close)[0]
                raise SingularDivisor(f"diagonal entries {i} and {j} nearly coincide")
            for j in range(1, m):
                while np.any(np.abs(t[:j] - t[j]) < delta):
                    t[j] += delta
            warnings.warn(
                "triangular_function: perturbed nearly repeated eigenvalues",
                RuntimeWarning,
                stacklevel=2,
            )
            T[np.diag_indices(m)] = t

    with np.errstate(all="ignore"):
        fd = np.asarray(evaluator(t), dtype=complex)
    if fd.shape != t.shape:
        fd = np.broadcast_to(fd, t.shape).astype(complex)
    if not np.all(np.isfinite(fd)):
        raise DomainError("function is not finite at some eigenvalue")

    F = np.zeros_like(T)
    F[np.diag_indices(m)] = fd
    for p in range(1, m):
        i = np.arange(m - p)
        j = i + p
        s = T[i, j] * (fd[j] - fd[i])
        if p > 1:
            k = i[:, None] + np.arange(1, p)[None, :]
            s = s + np.sum(T[i[:, None], k] * F[k, j[:, None]]
                           - F[i[:, None], k] * T[k, j[:, None]], axis=1)
        F[i, j] = s / (t[j] - t[i])
    return F


@dataclass
class LsqrResult:
    x: np.ndarray
    iterations: int
    converged: bool
    rnorm: float
    arnorm: float
    anorm: float

    def __iter__(self):
        # allows ``x, its = lsqr(...)``
        return iter((self.x, self.iterations))


def _forward_adjoint(A):
    if isinstance(A, np.ndarray):
        return (lambda v: A @ v), (lambda v: A.conj().T @ v)
    if isinstance(A, tuple):
        return A
    return A.apply, A.apply_adjoint


def lsqr(A, rhs, tol=1e-12, maxit=None, counters=None):
    """Paige-Saunders LSQR for ``min ||A x - rhs||`` (complex capable).

    ``A`` is a dense matrix, a ``(forward, adjoint)`` pair of callables, or an
    object with ``apply``/``apply_adjoint``.  Iteration stops when
    ``||A^H r|| <= tol * ||A|| * ||r||`` (``||A||`` is the usual Frobenius
    estimate built from the bidiagonalization), when ``||r|| <= tol * ||rhs||``,
    or after ``maxit`` iterations.  ``converged`` is False in the last case.
    """
    if not 0 < tol < 1:
        raise ValueError("lsqr tolerance must lie in (0, 1)")
    fwd, adj = _forward_adjoint(A)
    b = np.asarray(rhs)
    u = b.copy()
    beta = np.linalg.norm(u)
    x = None
    if beta == 0.0:
        v = adj(u)
        return LsqrResult(np.zeros_like(v), 0, True, 0.0, 0.0, 0.0)
    u = u / beta
    v = adj(u)
    alpha = np.linalg.norm(v)
    x = np.zeros_like(v, dtype=np.result_type(v, u))
    if alpha == 0.0:
        return LsqrResult(x, 0, True, beta, 0.0, 0.0)
    v = v / alpha
    w = v.copy()
    if maxit is None:
        maxit = 4 * max(len(v), 1)
    bnorm = beta
    phibar, rhobar = beta, alpha
    anorm2 = 0.0
    rnorm, arnorm = beta, alpha * beta
    converged = False
    its = 0
    for its in range(1, maxit + 1):
        u = fwd(v) - alpha * u
        beta = np.linalg.norm(u)
        if beta > 0:
            u = u / beta
        anorm2 += alpha**2 + beta**2
        v = adj(u) - beta * v
        alpha = np.linalg.norm(v)
        if alpha > 0:
            v = v / alpha
        if counters is not None:
            counters.inner_solver_iterations += 1
        rho = np.hypot(rhobar, beta)
        c, s = rhobar / rho, beta / rho
        theta = s * alpha
        rhobar = -c * alpha
        phi = c * phibar
        phibar = s * phibar
        x = x + (phi / rho) * w
        w = v - (theta / rho) * w
        rnorm = abs(phibar)
        arnorm = alpha * abs(c) * rnorm
        anorm = np.sqrt(anorm2)
        if rnorm <= tol * bnorm or arnorm <= tol * anorm * rnorm or alpha == 0.0:
            converged = True
            break
    return LsqrResult(x, its, converged, float(rnorm), float(arnorm), float(np.sqrt(anorm2)))


def svd_small(M):
    """Singular values of a small dense matrix, descending."""
    return np.linalg.svd(np.asarray(M), compute_uv=False)
