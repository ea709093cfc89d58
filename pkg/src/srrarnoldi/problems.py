"""Test operators: planted spectra under fast unitary transforms, clustered
spectra, and directed-graph Laplacians read from Matrix Market files.

A synthetic operator is ``A = T^{-1} B T`` with ``T`` unitary (FFT, DCT or a
product of Householder reflectors) and ``B`` upper bidiagonal, so its
eigenvalues are exactly the diagonal of ``B``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import NonSquare, ParseError, UnsupportedField
from .operators import LinearOperator, SparseOperator

__all__ = [
    "SPECTRUM_TRANSFORMS",
    "SpectrumSpec",
    "SyntheticOperator",
    "synthetic_operator",
    "clustered_spectrum_spec",
    "shifted_cluster_spec",
    "load_matrix_market",
    "write_matrix_market",
    "graph_laplacian",
]

# eigenvalue generators applied to equispaced points a_i
SPECTRUM_TRANSFORMS = {
    "f1": lambda a: np.exp(a / 10.0),
    "f2": lambda a: np.log(a + 1.0),
    "f3": lambda a: 1.0 + 1.0 / a**2,
    "f4": lambda a: 0.99**a,
}


@dataclass
class SpectrumSpec:
    """Recipe for the planted diagonal (and optional superdiagonal).

    kind
        ``'equispaced'``: ``f(a_i)`` for ``a`` equispaced on ``[lo, hi]``;
        ``'clustered'``: Gaussian blocks ``N(center, spread^2)`` with the given
        ``sizes`` (spread is a standard deviation);
        ``'list'``: explicit ``values``.
    coupling
        ``'none'`` or ``'gaussian'`` (superdiagonal i.i.d. ``N(0, coupling_std^2)``).
    """

    kind: str = "equispaced"
    f: str = "f1"
    lo: float = 2.0
    hi: float = 10.0
    centers: Sequence[float] = ()
    spreads: Sequence[float] = ()
    sizes: Sequence[int] = ()
    values: Sequence[float] = ()
    coupling: str = "none"
    coupling_std: float = 1.0

    def __post_init__(self):
        if self.kind not in ("equispaced", "clustered", "list"):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.coupling not in ("none", "gaussian"):
            raise ValueError(f"unknown coupling {self.coupling!r}")
        if self.kind == "clustered":
            if not (len(self.centers) == len(self.spreads) == len(self.sizes)):
                raise ValueError("centers, spreads and sizes must have equal length")
            if any(s <= 0 for s in self.spreads):
                raise ValueError("cluster spreads must be positive")
        if self.kind == "equispaced" and self.f not in SPECTRUM_TRANSFORMS:
            raise ValueError(f"unknown spectrum transform {self.f!r}")

    def diagonal(self, n, rng):
        if self.kind == "equispaced":
            a = np.linspace(self.lo, self.hi, n)
            return SPECTRUM_TRANSFORMS[self.f](a)
        if self.kind == "list":
            vals = np.asarray(self.values)
            if vals.shape != (n,):
                raise ValueError(f"spectrum list has {vals.size} values, need {n}")
            return vals.copy()
        if sum(self.sizes) != n:
            raise ValueError(f"cluster sizes sum to {sum(self.sizes)}, need {n}")
        return np.concatenate([
            rng.normal(c, s, size=k)
            for c, s, k in zip(self.centers, self.spreads, self.sizes)
        ])

    def to_dict(self):
        d = dict(self.__dict__)
        for key in ("centers", "spreads", "sizes", "values"):
            d[key] = list(d[key])
        return d


def clustered_spectrum_spec(n, centers=(1.0, 10.0, 100.0, 1000.0)):
    """Equal-size clusters ``N(c, (c/10)^2)``, the symmetric matrix-function test."""
    k = len(centers)
    sizes = [n // k] * k
    sizes[-1] += n - sum(sizes)
    return SpectrumSpec(kind="clustered", centers=list(centers),
                        spreads=[c / 10.0 for c in centers], sizes=sizes)


def shifted_cluster_spec(n, tail=10):
    """Blocks ``N(10^k, (10^{k-1})^2)``, k = 1..4, then ``tail`` values from ``N(0, 1)``."""
    body = n - tail
    sizes = [body // 4] * 4
    sizes[-1] += body - sum(sizes)
    return SpectrumSpec(kind="clustered",
                        centers=[10.0, 100.0, 1000.0, 10000.0, 0.0],
                        spreads=[1.0, 10.0, 100.0, 1000.0, 1.0],
                        sizes=sizes + [tail])


class SyntheticOperator(LinearOperator):
    """``A = T^{-1} B T`` with ``B`` upper bidiagonal and ``T`` unitary."""

    TRANSFORMS = ("fft", "dct", "random-orthogonal", "identity")

    def __init__(self, diag, superdiag=None, transform="fft", reflectors=None,
                 spec=None, seed=None):
        diag = np.asarray(diag)
        n = diag.shape[0]
        if transform not in self.TRANSFORMS:
            raise ValueError(f"unknown transform {transform!r}")
        if superdiag is None:
            superdiag = np.zeros(max(n - 1, 0))
        self.diag = diag
        self.superdiag = np.asarray(superdiag)
        self.transform = transform
        self.reflectors = reflectors
        self.spec = spec
        self.seed = seed
        complex_ops = transform == "fft" or np.iscomplexobj(diag) or np.iscomplexobj(superdiag)
        super().__init__(n, self._apply, self._apply_adjoint,
                         complex if complex_ops else float)

    @property
    def planted_eigenvalues(self):
        return self.diag.copy()

    @property
    def is_hermitian(self):
        return not np.any(self.superdiag) and not np.iscomplexobj(self.diag)

    def forward(self, x):
        """``T x``."""
        if self.transform == "fft":
            return sfft.fft(x, norm="ortho", axis=0)
        if self.transform == "dct":
            return sfft.dct(x, type=2, norm="ortho", axis=0)
        if self.transform == "random-orthogonal":
            y = np.array(x, copy=True)
            for v in self.reflectors:
                y -= 2.0 * np.multiply.outer(v, v @ y) if y.ndim > 1 else 2.0 * v * (v @ y)
            return y
        return np.array(x, copy=True)

    def inverse(self, y):
        """``T^{-1} y = T^H y``."""
        if self.transform == "fft":
            return sfft.ifft(y, norm="ortho", axis=0)
        if self.transform == "dct":
            return sfft.idct(y, type=2, norm="ortho", axis=0)
        if self.transform == "random-orthogonal":
            x = np.array(y, copy=True)
            for v in reversed(self.reflectors):
                x -= 2.0 * np.multiply.outer(v, v @ x) if x.ndim > 1 else 2.0 * v * (v @ x)
            return x
        return np.array(y, copy=True)

    def _core(self, y, adjoint=False):
        if adjoint:
            z = self.diag.conj() * y
            z[1:] += self.superdiag.conj() * y[:-1]
        else:
            z = self.diag * y
            z[:-1] += self.superdiag * y[1:]
        return z

    def _apply(self, x):
        return self.inverse(self._core(self.forward(x)))

    def _apply_adjoint(self, x):
        return self.inverse(self._core(self.forward(x), adjoint=True))

    def solve(self, b):
        """``A^{-1} b`` through a bidiagonal back substitution."""
        y = self.forward(b)
        ab = np.zeros((2, self.n), dtype=np.result_type(self.diag, self.superdiag))
        ab[0, 1:] = self.superdiag
        ab[1, :] = self.diag
        z = sla.solve_banded((0, 1), ab, y)
        return self.inverse(z)

    def exact_function(self, f, b):
        """Exact ``f(A) b`` for a normal operator (zero coupling)."""
        if np.any(self.superdiag):
            raise NotImplementedError("exact f(A)b only for operators without coupling")
        evaluator = getattr(f, "evaluator", f)
        fd = evaluator(self.diag.astype(complex))
        if not np.iscomplexobj(self.diag) and np.all(np.abs(np.imag(fd)) == 0):
            fd = fd.real
        return self.inverse(fd * self.forward(b))

    def core_dense(self):
        """Dense bidiagonal core ``B``; ``||A||_2 = ||B||_2`` since ``T`` is unitary."""
        B = np.diag(self.diag).astype(np.result_type(self.diag, self.superdiag))
        if self.n > 1:
            B[np.arange(self.n - 1), np.arange(1, self.n)] = self.superdiag
        return B

    def norm(self):
        """Exact spectral norm (dense SVD of the core, desk sizes only)."""
        if not np.any(self.superdiag):
            return float(np.max(np.abs(self.diag)))
        return float(np.linalg.norm(self.core_dense(), 2))

    def norm_estimate(self):
        """``||B||_2`` upper bound (= ``||A||_2`` for the normal case)."""
        if not np.any(self.superdiag):
            return float(np.max(np.abs(self.diag)))
        return float(np.max(np.abs(self.diag)) + np.max(np.abs(self.superdiag)))


def synthetic_operator(n, spec=None, transform="fft", seed=0, reflectors=20):
    """Build a :class:`SyntheticOperator` with a planted spectrum.

    ``reflectors`` sets the number of Householder reflectors for the
    ``'random-orthogonal'`` transform.  Randomness (cluster samples,
    coupling, reflectors) derives from ``seed``.
    """
    spec = spec or SpectrumSpec()
    if transform not in SyntheticOperator.TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    ss = np.random.SeedSequence(seed)
    r_diag, r_cpl, r_refl = (np.random.default_rng(s) for s in ss.spawn(3))
    diag = spec.diagonal(n, r_diag)
    superdiag = None
    if spec.coupling == "gaussian":
        superdiag = r_cpl.normal(0.0, spec.coupling_std, size=n - 1)
    refl = None
    if transform == "random-orthogonal":
        V = r_refl.standard_normal((reflectors, n))
        refl = list(V / np.linalg.norm(V, axis=1, keepdims=True))
    return SyntheticOperator(diag, superdiag, transform, refl, spec=spec, seed=seed)


# --- Matrix Market ---------------------------------------------------------

_MM_FIELDS = ("real", "integer", "complex", "pattern", "double")
_MM_SYMMETRY = ("general", "symmetric", "skew-symmetric", "hermitian")


def _read_matrix_market(lines):
    it = iter(enumerate(lines, start=1))
    try:
        lineno, header = next(it)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    tokens = header.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise ParseError("missing %%MatrixMarket header", lineno)
    obj, fmt, fld, sym = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise UnsupportedField(f"object {obj!r} not supported", lineno)
    if fmt != "coordinate":
        raise UnsupportedField(f"format {fmt!r} not supported (need coordinate)", lineno)
    if fld not in _MM_FIELDS:
        raise UnsupportedField(f"field {fld!r} not supported", lineno)
    if sym not in _MM_SYMMETRY:
        raise UnsupportedField(f"symmetry {sym!r} not supported", lineno)

    size = None
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if len(parts) != 3:
            raise ParseError("size line must hold 'rows cols nnz'", lineno)
        try:
            size = tuple(int(p) for p in parts)
        except ValueError:
            raise ParseError(f"bad size line {s!r}", lineno) from None
        break
    if size is None:
        raise ParseError("missing size line", lineno)
    nrows, ncols, nnz = size

    want = {"pattern": 2, "complex": 4}.get(fld, 3)
    rows, cols, vals = [], [], []
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if len(parts) != want:
            raise ParseError(f"expected {want} fields, got {len(parts)}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            if fld == "pattern":
                v = 1.0
            elif fld == "complex":
                v = complex(float(parts[2]), float(parts[3]))
            elif fld == "integer":
                v = int(parts[2])
            else:
                v = float(parts[2])
        except ValueError:
            raise ParseError(f"cannot parse entry {s!r}", lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise ParseError(f"index ({i}, {j}) out of range", lineno)
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
    if len(vals) != nnz:
        raise ParseError(f"header announces {nnz} entries, found {len(vals)}", lineno)

    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    dtype = complex if fld == "complex" else float
    vals = np.asarray(vals, dtype=dtype)
    if sym != "general":
        off = rows != cols
        mirror = vals[off]
        if sym == "skew-symmetric":
            mirror = -mirror
        elif sym == "hermitian":
            mirror = mirror.conj()
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, mirror]))
    M = sp.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols)).tocsr()
    return M, {"field": fld, "symmetry": sym, "nnz_stored": nnz}


def load_matrix_market(path, square=True):
    """Read a coordinate Matrix Market file into a :class:`SparseOperator`.

    Symmetric storage is expanded; pattern files get unit weights.
    """
    with open(path, "r") as fh:
        M, info = _read_matrix_market(fh)
    if square and M.shape[0] != M.shape[1]:
        raise NonSquare(f"matrix is {M.shape[0]} x {M.shape[1]}")
    op = SparseOperator(M)
    op.mm_info = info
    return op


def write_matrix_market(path, M, comment=None):
    """Write a sparse matrix in general coordinate format (17 significant digits)."""
    M = sp.coo_matrix(M)
    cplx = np.iscomplexobj(M.data)
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {'complex' if cplx else 'real'} general\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{M.shape[0]} {M.shape[1]} {M.nnz}\n")
        for i, j, v in zip(M.row, M.col, M.data):
            if cplx:
                fh.write(f"{i + 1} {j + 1} {v.real:.17g} {v.imag:.17g}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def graph_laplacian(adjacency, mode="out-degree"):
    """Out-degree Laplacian ``L = D_out - A`` of the unweighted directed graph.

    Edge weights are replaced by 1, self loops are dropped and duplicate
    edges collapse to one.  Row sums of ``L`` are zero.
    """
    if mode != "out-degree":
        raise ValueError(f"unsupported Laplacian mode {mode!r}")
    M = adjacency.matrix if isinstance(adjacency, SparseOperator) else adjacency
    M = sp.coo_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise NonSquare(f"adjacency is {M.shape[0]} x {M.shape[1]}")
    keep = (M.row != M.col) & (M.data != 0)
    A = sp.csr_matrix((np.ones(int(keep.sum())), (M.row[keep], M.col[keep])), shape=M.shape)
    A.data[:] = 1.0  # duplicates were summed on conversion
    deg = np.asarray(A.sum(axis=1)).ravel()
    L = sp.diags(deg) - A
    op = SparseOperator(L.tocsr())
    op.laplacian_convention = "out-degree: L = D_out - A, unweighted, loops dropped"
    return op
