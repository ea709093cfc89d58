"""Sparse sign subspace embeddings.

Each of the ``n`` columns of the ``d x n`` sketch holds ``xi`` entries
``+-1/sqrt(xi)`` at distinct random rows.  Randomness comes from NumPy's
PCG64 bit generator seeded with the user seed, so a sketch is fully
determined by ``(d, n, xi, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, InvalidDimensions

DEFAULT_XI = 8


@dataclass(frozen=True, eq=False)
class SparseSignSketch:
    d: int
    n: int
    xi: int
    seed: object
    rows: np.ndarray = field(repr=False)   # (n, xi) row indices per column
    signs: np.ndarray = field(repr=False)  # (n, xi) entries in {-1, +1}
    matrix: sp.csr_matrix = field(repr=False, compare=False)

    @property
    def scale(self):
        return 1.0 / np.sqrt(self.xi)

    def apply(self, v):
        return sketch_apply(self, v)

    def todense(self):
        return self.matrix.toarray()


def _draw_rows(rng, d, n, xi):
    # rejection sampling: redraw any column that contains a repeated row
    rows = rng.integers(0, d, size=(n, xi))
    if xi == 1:
        return rows
    while True:
        srt = np.sort(rows, axis=1)
        bad = np.any(srt[:, 1:] == srt[:, :-1], axis=1)
        nbad = int(bad.sum())
        if nbad == 0:
            return rows
        rows[bad] = rng.integers(0, d, size=(nbad, xi))


def _from_parts(d, n, xi, seed, rows, signs):
    data = (signs * (1.0 / np.sqrt(xi))).ravel()
    cols = np.repeat(np.arange(n), xi)
    M = sp.csr_matrix((data, (rows.ravel(), cols)), shape=(d, n))
    return SparseSignSketch(d, n, xi, seed, rows, signs, M)


def build_sketch(d, n, xi=DEFAULT_XI, seed=0):
    """Draw a sparse sign sketch ``Omega`` of shape ``(d, n)``."""
    d, n, xi = int(d), int(n), int(xi)
    if not (1 <= xi <= d <= n):
        raise InvalidDimensions(f"need 1 <= xi <= d <= n, got xi={xi}, d={d}, n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = _draw_rows(rng, d, n, xi)
    signs = rng.integers(0, 2, size=(n, xi)) * 2 - 1
    return _from_parts(d, n, xi, seed, rows, signs)


def sketch_from_rows(d, rows, signs=None, seed=None):
    """Build a sketch with prescribed rows/signs (deterministic test configs)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=int))
    n, xi = rows.shape
    if signs is None:
        signs = np.ones_like(rows)
    return _from_parts(int(d), n, xi, seed, rows, np.asarray(signs))


def identity_sketch(n):
    """``d = n``, ``xi = 1`` sketch equal to the identity matrix."""
    return sketch_from_rows(n, np.arange(n)[:, None])


def sketch_apply(S, v):
    """Compute ``Omega @ v`` for a vector or a matrix of column vectors."""
    v = np.asarray(v)
    if v.shape[0] != S.n:
        raise DimensionMismatch(f"sketch expects length {S.n}, got {v.shape[0]}")
    return S.matrix @ v


@dataclass(frozen=True)
class EmbeddingQuality:
    epsilon: float
    kappa_eps: float

    @classmethod
    def from_epsilon(cls, eps):
        return cls(float(eps), kappa_from_epsilon(eps))


def kappa_from_epsilon(eps):
    """``sqrt((1 + eps) / (1 - eps))``; infinite once ``eps >= 1``."""
    if eps >= 1.0:
        return float("inf")
    return float(np.sqrt((1.0 + eps) / (1.0 - eps)))


def measure_distortion(S, basis, trials=None, rng=None):
    """Measured distortion of ``Omega`` on ``range(basis)``.

    With ``trials=None`` the exact value ``max(1 - smin^2, smax^2 - 1)`` over
    the singular values of ``Omega @ basis`` is returned.  Otherwise ``eps``
    is estimated from ``trials`` random unit vectors of the subspace, which
    gives a lower bound on the exact value.
    """
    basis = np.asarray(basis)
    gram_err = np.linalg.norm(basis.conj().T @ basis - np.eye(basis.shape[1]))
    if gram_err > 1e-10 * max(1, basis.shape[1]):
        raise ValueError("measure_distortion needs an orthonormal basis")
    SB = sketch_apply(S, basis)
    if trials is None:
        sv = np.linalg.svd(SB, compute_uv=False)
        eps = max(1.0 - sv[-1] ** 2, sv[0] ** 2 - 1.0)
    else:
        rng = np.random.default_rng(rng)
        coeffs = rng.standard_normal((basis.shape[1], trials))
        coeffs /= np.linalg.norm(coeffs, axis=0)
        ratios = np.linalg.norm(SB @ coeffs, axis=0) ** 2
        eps = float(np.max(np.abs(ratios - 1.0)))
    return EmbeddingQuality.from_epsilon(max(eps, 0.0))
