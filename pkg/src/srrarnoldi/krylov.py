"""Arnoldi and randomized Arnoldi decompositions.

All decompositions are stored in the general Krylov form

    A U = U H + next c^H

with ``next`` the column that would be appended by the following step and
``c`` a general coefficient vector (``h_{m+1,m} e_m`` right after plain
Arnoldi, anything after compression).  Expansion appends ``next`` to ``U``
and borders ``H`` with the row ``c^H``, which is why the same routine serves
initial construction, ordinary expansion and expansion after a restart.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import Breakdown, SketchTooSmall, ZeroInitialVector
from .linalg import householder_qr, svd_small
from .operators import aslinearoperator
from .sketch import sketch_apply

__all__ = [
    "KrylovDecomposition",
    "OrthonormalKrylovDecomposition",
    "RandomizedKrylovDecomposition",
    "arnoldi",
    "randomized_arnoldi",
    "expand",
    "BREAKDOWN_TOL",
]

BREAKDOWN_TOL = 1e-12
STANDARD_ORTHO = ("cgs", "cgs2")
SKETCHED_ORTHO = ("rgs", "rcgs2")


class KrylovDecomposition:
    """``A U = U H + next c^H`` with a growable basis buffer."""

    def __init__(self, U, H, next, c, beta=None, ortho="cgs2", breakdown=False):
        U = np.asarray(U)
        n, k = U.shape
        dtype = np.result_type(U, next, H, float)
        self._U = np.empty((n, max(2 * k, 8)), dtype=dtype)
        self._U[:, :k] = U
        self.order = k
        self.H = np.asarray(H, dtype=np.result_type(H, float)).reshape(k, k)
        self.next = np.asarray(next, dtype=dtype)
        self.c = np.asarray(c, dtype=np.result_type(c, float)).reshape(k)
        self.beta = beta
        self.ortho = ortho
        self.breakdown = breakdown

    @classmethod
    def empty(cls, start, beta, **kw):
        n = start.shape[0]
        return cls(np.zeros((n, 0), start.dtype), np.zeros((0, 0)), start, np.zeros(0),
                   beta=beta, **kw)

    @property
    def n(self):
        return self._U.shape[0]

    @property
    def U(self):
        return self._U[:, :self.order]

    @property
    def invariant_subspace_found(self):
        return self.breakdown

    @property
    def residual_scale(self):
        """``h_{m+1,m}`` when ``c`` is a multiple of ``e_m``."""
        return self.c[-1] if self.order else 0.0

    def _append_basis(self, u):
        k = self.order
        dtype = np.result_type(self._U, u)
        if k == self._U.shape[1] or dtype != self._U.dtype:
            buf = np.empty((self.n, max(2 * self._U.shape[1], k + 1)), dtype=dtype)
            buf[:, :k] = self._U[:, :k]
            self._U = buf
        self._U[:, k] = u
        self.order = k + 1

    def residual(self, A):
        """Frobenius norm of ``A U - U H - next c^H``."""
        A = aslinearoperator(A)
        AU = A @ self.U
        R = AU - self.U @ self.H - np.outer(self.next, self.c.conj())
        return float(np.linalg.norm(R))

    def copy(self):
        return self.__class__(self.U.copy(), self.H.copy(), self.next.copy(), self.c.copy(),
                              beta=self.beta, ortho=self.ortho, breakdown=self.breakdown)


class OrthonormalKrylovDecomposition(KrylovDecomposition):
    """Orthonormal basis ``Q`` with the next vector orthogonal to ``range(Q)``."""

    @property
    def Q(self):
        return self.U

    @property
    def G(self):
        return self.H


class RandomizedKrylovDecomposition(KrylovDecomposition):
    """Krylov decomposition carrying a sketch and the sketched basis ``Omega U``.

    A thin QR of ``Omega U`` is kept up to date so that ``(Omega U)^+`` can be
    applied without assuming ``Omega U`` has orthonormal columns (it does not
    after a similarity-restoring restart).
    """

    def __init__(self, U, H, next, c, sketch, SU=None, s_next=None, beta=None,
                 ortho="rgs", breakdown=False):
        super().__init__(U, H, next, c, beta=beta, ortho=ortho, breakdown=breakdown)
        self.sketch = sketch
        k = self.order
        if SU is None:
            SU = sketch_apply(sketch, self.U) if k else np.zeros((sketch.d, 0))
        if s_next is None:
            s_next = sketch_apply(sketch, self.next)
        dtype = np.result_type(SU, s_next, float)
        self._SU = np.empty((sketch.d, max(2 * k, 8)), dtype=dtype)
        self._SU[:, :k] = SU
        self.s_next = np.asarray(s_next)
        self._reset_qr()

    @property
    def SU(self):
        return self._SU[:, :self.order]

    def _reset_qr(self):
        k = self.order
        cap = self._SU.shape[1]
        self._Qs = np.zeros((self.sketch.d, cap), dtype=self._SU.dtype)
        self._Rs = np.zeros((cap, cap), dtype=self._SU.dtype)
        if k:
            Q, R = householder_qr(self.SU)
            self._Qs[:, :k] = Q
            self._Rs[:k, :k] = R

    def _append_basis(self, u, su):
        k = self.order
        # Gram-Schmidt twice in sketch space for the new QR column; checked
        # before anything is mutated so a breakdown leaves dec consistent
        Q = self._Qs[:, :k]
        r = Q.conj().T @ su
        t = su - Q @ r
        r2 = Q.conj().T @ t
        t -= Q @ r2
        r += r2
        rho = np.linalg.norm(t)
        if rho <= 1e-14 * max(np.linalg.norm(su), np.finfo(float).tiny):
            raise Breakdown("sketched basis became rank deficient")
        super()._append_basis(u)
        dtype = np.result_type(self._SU, su)
        if k == self._SU.shape[1] or dtype != self._SU.dtype:
            cap = max(2 * self._SU.shape[1], k + 1)
            for name in ("_SU", "_Qs"):
                old = getattr(self, name)
                buf = np.zeros((old.shape[0], cap), dtype=dtype)
                buf[:, :k] = old[:, :k]
                setattr(self, name, buf)
            R = np.zeros((cap, cap), dtype=dtype)
            R[:k, :k] = self._Rs[:k, :k]
            self._Rs = R
        self._SU[:, k] = su
        self._Qs[:, k] = t / rho
        self._Rs[:k, k] = r
        self._Rs[k, k] = rho

    def sketched_pinv_apply(self, s):
        """``(Omega U)^+ s`` via the maintained QR, with one reorthogonalization."""
        k = self.order
        Q = self._Qs[:, :k]
        p = Q.conj().T @ s
        p += Q.conj().T @ (s - Q @ p)
        return sla.solve_triangular(self._Rs[:k, :k], p)

    def omega_orthonormality_error(self):
        SU = self.SU
        return float(np.linalg.norm(SU.conj().T @ SU - np.eye(self.order)))

    def copy(self):
        return RandomizedKrylovDecomposition(
            self.U.copy(), self.H.copy(), self.next.copy(), self.c.copy(), self.sketch,
            SU=self.SU.copy(), s_next=self.s_next.copy(), beta=self.beta,
            ortho=self.ortho, breakdown=self.breakdown)


def _check_start(b):
    b = np.asarray(b)
    if b.ndim != 1:
        raise ValueError("initial vector must be one-dimensional")
    if not np.any(b):
        raise ZeroInitialVector("initial vector is zero")
    if not np.issubdtype(b.dtype, np.inexact):
        b = b.astype(float)
    return b


def arnoldi(A, b, m, ortho="cgs2", counters=None):
    """``m`` steps of standard Arnoldi started from ``b / ||b||``.

    Stops early (flagging ``invariant_subspace_found``) on breakdown.
    """
    if ortho not in STANDARD_ORTHO:
        raise ValueError(f"standard Arnoldi supports {STANDARD_ORTHO}, got {ortho!r}")
    A = aslinearoperator(A)
    b = _check_start(b)
    beta = np.linalg.norm(b)
    if counters is not None:
        counters.inner_products += 1
    dec = OrthonormalKrylovDecomposition.empty(b / beta, beta, ortho=ortho)
    return expand(dec, A, m, counters=counters)


def randomized_arnoldi(A, b, m, sketch, ortho="rgs", counters=None):
    """``m`` steps of randomized Arnoldi started from ``b / ||Omega b||``."""
    if ortho not in SKETCHED_ORTHO:
        raise ValueError(f"randomized Arnoldi supports {SKETCHED_ORTHO}, got {ortho!r}")
    A = aslinearoperator(A)
    b = _check_start(b)
    if m > sketch.d:
        raise SketchTooSmall(f"order m={m} exceeds sketch dimension d={sketch.d}")
    sb = sketch_apply(sketch, b)
    if counters is not None:
        counters.sketch_applications += 1
    beta = np.linalg.norm(sb)
    if beta == 0.0:
        raise ZeroInitialVector("initial vector lies in the null space of the sketch")
    dec = RandomizedKrylovDecomposition(
        np.zeros((b.shape[0], 0), b.dtype), np.zeros((0, 0)), b / beta, np.zeros(0),
        sketch, s_next=sb / beta, beta=beta, ortho=ortho)
    return expand(dec, A, m, counters=counters)


def expand(dec, A, steps, ortho=None, counters=None):
    """Grow ``dec`` in place by ``steps`` Arnoldi steps and return it.

    The current ``next`` vector becomes column ``order + 1``; ``H`` is
    bordered with ``c^H`` so the decomposition identity is preserved, then
    the new residual direction is orthogonalized (or Omega-orthogonalized)
    against *all* columns, including a non-Omega-orthonormal one left by a
    restart.
    """
    A = aslinearoperator(A)
    ortho = ortho or dec.ortho
    sketched = isinstance(dec, RandomizedKrylovDecomposition)
    if sketched and ortho not in SKETCHED_ORTHO:
        raise ValueError(f"sketched decomposition needs one of {SKETCHED_ORTHO}")
    if not sketched and ortho not in STANDARD_ORTHO:
        raise ValueError(f"orthonormal decomposition needs one of {STANDARD_ORTHO}")
    if sketched and dec.order + steps > dec.sketch.d:
        raise SketchTooSmall(
            f"order {dec.order + steps} would exceed sketch dimension {dec.sketch.d}")
    n = dec.n
    for _ in range(steps):
        if dec.breakdown:
            break
        k = dec.order
        u = dec.next
        if sketched:
            dec._append_basis(u, dec.s_next)
        else:
            dec._append_basis(u)
        U = dec.U
        w = A.apply(u)
        if counters is not None:
            counters.matvecs += 1
        if not sketched:
            passes = 2 if ortho == "cgs2" else 1
            h = np.zeros(k + 1, dtype=np.result_type(U, w))
            for _p in range(passes):
                g = U.conj().T @ w
                w = w - U @ g
                h += g
            beta = np.linalg.norm(w)
            ref = np.sqrt(np.linalg.norm(h) ** 2 + beta ** 2)
            if counters is not None:
                counters.inner_products += passes * (k + 1) + 1
                counters.vector_updates += passes * (k + 1)
                counters.orth_flops += 2 * n * (2 * passes * (k + 1) + 1)
            s_w = None
        else:
            sk = dec.sketch
            s_w = sketch_apply(sk, w)
            ref = np.linalg.norm(s_w)
            if ortho == "rgs":
                h = dec.sketched_pinv_apply(s_w)
                w = w - U @ h
                passes, nsk = 1, 1
            else:
                SU = dec.SU
                h = SU.conj().T @ s_w
                w = w - U @ h
                s_w = sketch_apply(sk, w)
                h2 = SU.conj().T @ s_w
                w = w - U @ h2
                h = h + h2
                passes, nsk = 2, 2
            s_w = sketch_apply(sk, w)
            beta = np.linalg.norm(s_w)
            if counters is not None:
                counters.sketch_applications += nsk + 1
                counters.vector_updates += passes * (k + 1)
                counters.orth_flops += 2 * n * passes * (k + 1)

        H = np.zeros((k + 1, k + 1), dtype=np.result_type(dec.H, dec.c, h))
        H[:k, :k] = dec.H
        H[k, :k] = dec.c.conj()
        H[:, k] = h
        dec.H = H
        c = np.zeros(k + 1, dtype=float)
        if beta <= BREAKDOWN_TOL * ref:
            # exact invariant subspace (up to roundoff): keep the tiny
            # remainder unnormalized so the identity still holds
            dec.breakdown = True
            c[k] = 1.0
            dec.next = w
            if sketched:
                dec.s_next = s_w
        else:
            c[k] = beta
            dec.next = w / beta
            if sketched:
                dec.s_next = s_w / beta
        dec.c = c
    return dec


def subspace_angles(X, Y):
    """Largest principal angle (radians) between ``range(X)`` and ``range(Y)``."""
    return float(np.max(sla.subspace_angles(X, Y)))


def basis_condition(U):
    sv = svd_small(U)
    return float(sv[0] / sv[-1])
