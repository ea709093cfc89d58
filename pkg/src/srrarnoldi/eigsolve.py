"""Restarted Krylov-Schur eigensolvers.

Three variants share one driver:

``'ks'``
    orthonormal bases built with CGS2, no sketch;
``'rks'``
    Omega-orthonormal bases from randomized Gram-Schmidt, no correction;
``'srr-ks'``
    randomized bases plus the similarity-restoring correction before every
    Schur step, so the Ritz values coincide with those of ``'ks'`` started
    from the same vector.

A cycle is: (correct) -> ordered Schur -> convergence check -> compress to
order ``ell`` -> expand back to order ``m`` -> (sketched reorthogonalization).
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .counters import Counters
from .errors import Breakdown, ConfigError, NotConverged
from .krylov import (
    KrylovDecomposition,
    OrthonormalKrylovDecomposition,
    RandomizedKrylovDecomposition,
    arnoldi,
    expand,
    randomized_arnoldi,
)
from .linalg import SchurForm, rank_eigenvalues, schur, selection_key
from .operators import aslinearoperator
from .restore import CorrectedKrylovDecomposition, CorrectionSolver, correct
from .sketch import DEFAULT_XI, build_sketch

__all__ = [
    "VARIANTS",
    "EigConfig",
    "RitzSet",
    "CycleRecord",
    "CycleTrace",
    "CycleState",
    "compress",
    "sketched_reorthogonalize",
    "ritz_vectors",
    "residual_estimates",
    "selection_size",
    "initial_vector",
    "match_values",
    "krylov_schur",
]

VARIANTS = ("ks", "rks", "srr-ks")
_VARIANT_ALIASES = {"KS": "ks", "RKS": "rks", "SRR-KS": "srr-ks", "srr": "srr-ks"}
TIE_GAP = 1e-12


@dataclass
class EigConfig:
    """Parameters of a Krylov-Schur run.

    ``m`` and ``ell`` default to ``4k`` and ``2k``.  ``max_cycles`` is an
    optional hard cap on restarts, used to run variants for a fixed number
    of cycles when comparing costs.
    """

    k: int = 10
    m: Optional[int] = None
    ell: Optional[int] = None
    which: str = "LM"
    tol: float = 1e-7
    max_matvecs: Optional[int] = None
    max_cycles: Optional[int] = None
    variant: str = "srr-ks"
    d: int = 100
    xi: int = DEFAULT_XI
    seed: int = 0
    reorthogonalize: bool = False
    solver: CorrectionSolver = field(default_factory=CorrectionSolver)
    ortho: Optional[str] = None
    strict: bool = False

    def __post_init__(self):
        self.variant = _VARIANT_ALIASES.get(self.variant, self.variant)
        if isinstance(self.solver, dict):
            self.solver = CorrectionSolver(**self.solver)
        if self.m is None:
            self.m = 4 * self.k
        if self.ell is None:
            self.ell = 2 * self.k
        self.validate()

    @property
    def randomized(self):
        return self.variant != "ks"

    @property
    def orthogonalization(self):
        if self.ortho is not None:
            return self.ortho
        return "rgs" if self.randomized else "cgs2"

    @property
    def matvec_cap(self):
        return self.max_matvecs if self.max_matvecs is not None else 100 * self.m

    def validate(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 1 <= self.k <= self.ell < self.m:
            raise ConfigError(f"need 1 <= k <= ell < m, got k={self.k}, ell={self.ell}, m={self.m}")
        if self.randomized and self.m > self.d:
            raise ConfigError(f"randomized variants need m <= d, got m={self.m}, d={self.d}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        try:
            selection_key(self.which)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        d = asdict(self)
        d["solver"] = asdict(self.solver)
        return d


@dataclass
class RitzSet:
    """Wanted Ritz values, basis of the approximate invariant subspace, residuals."""

    values: np.ndarray
    basis: np.ndarray
    residuals: np.ndarray
    cycles: int
    matvecs: int
    converged: bool
    warnings: List[str] = field(default_factory=list)

    @property
    def k(self):
        return self.values.shape[0]


@dataclass
class CycleRecord:
    cycle: int
    order: int
    ell: int
    matvecs: int
    inner_products: int
    ritz: np.ndarray
    residuals: np.ndarray
    counters: dict

    def row(self):
        out = {"cycle": self.cycle, "matvecs": self.matvecs,
               "inner_products": self.inner_products, "order": self.order, "ell": self.ell}
        for i, t in enumerate(self.ritz, start=1):
            out[f"theta_{i}_re"] = float(np.real(t))
            out[f"theta_{i}_im"] = float(np.imag(t))
        for i, r in enumerate(self.residuals, start=1):
            out[f"resid_{i}"] = float(r)
        return out


@dataclass
class CycleTrace:
    variant: str
    records: List[CycleRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def ritz_history(self):
        return [r.ritz for r in self.records]

    def rows(self):
        return [r.row() for r in self.records]


@dataclass
class CycleState:
    """What a per-cycle callback sees: the order-``m`` decomposition before
    compression, its corrected form (SRR only) and the Schur form used."""

    cycle: int
    decomposition: KrylovDecomposition
    corrected: Optional[CorrectedKrylovDecomposition]
    schur: SchurForm
    counters: Counters


def selection_size(values, which, ell, max_ell):
    """Smallest ``ell' >= ell`` whose selection boundary does not split a tie.

    Two ranked keys closer than ``TIE_GAP`` (relative) count as tied, which
    covers complex-conjugate pairs of real matrices under any real-valued
    ranking.  The result is capped at ``max_ell``.
    """
    key = selection_key(which)
    order = rank_eigenvalues(values, which)
    keys = np.asarray([key(v) for v in np.asarray(values)[order]], dtype=float)
    new = ell
    while new < min(max_ell, keys.size):
        a, b = keys[new - 1], keys[new]
        if abs(a - b) > TIE_GAP * max(abs(a), abs(b), np.finfo(float).tiny):
            break
        new += 1
    return new


def match_values(a, b, relative=True):
    """Largest pointwise gap between two value multisets after optimal matching.

    Pairs are chosen by minimum-cost assignment on ``|a_i - b_j|``, so the
    result does not depend on how either list is ordered.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise ValueError(f"multisets differ in size: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    gap = cost[i, j]
    if relative:
        gap = gap / np.maximum(np.abs(a[i]), np.finfo(float).tiny)
    return float(gap.max())


def ritz_vectors(S, count):
    """Eigenvectors of the leading ``count`` diagonal entries of triangular ``S``.

    Column ``i`` solves ``(S - S_ii I) z = 0`` with ``z_i = 1`` and zeros
    below ``i``, by back substitution; columns are normalized.
    """
    m = S.shape[0]
    Z = np.zeros((m, count), dtype=complex)
    for i in range(count):
        Z[i, i] = 1.0
        if i:
            T = S[:i, :i] - S[i, i] * np.eye(i)
            # nudge exact ties so the solve stays defined
            d = np.diag(T).copy()
            tiny = np.finfo(float).eps * max(np.abs(S).max(), 1.0)
            d[np.abs(d) < tiny] = tiny
            T[np.diag_indices(i)] = d
            Z[:i, i] = sla.solve_triangular(T, -S[:i, i])
        Z[:, i] /= np.linalg.norm(Z[:, i])
    return Z


def residual_estimates(dec, sf: SchurForm, count=None, gram=None, exact_norms=False):
    """Residual norms ``||A x - theta x|| / ||x||`` of the leading Ritz pairs.

    For ``A U = U H + r c^H`` and a Ritz pair ``(theta, y)`` of ``H`` with
    ``y = V z``, the residual of ``x = U y`` is ``r (c^H y)``, hence

        estimate = ||r|| |c^H y| / ||U y||.

    ``||U y||`` is ``||y||`` for an orthonormal basis, ``sqrt(y^H G y)`` when
    the Gram matrix ``G`` is supplied, and is computed explicitly otherwise.
    ``||r||`` is always measured explicitly.
    """
    count = sf.selected if count is None else count
    if count == 0:
        return np.zeros(0)
    Z = ritz_vectors(sf.S, count)
    Y = sf.V @ Z
    rnorm = np.linalg.norm(dec.next)
    coef = np.abs(dec.c.conj() @ Y)
    if isinstance(dec, OrthonormalKrylovDecomposition) and not exact_norms:
        xnorm = np.linalg.norm(Y, axis=0)
    elif gram is not None:
        xnorm = np.sqrt(np.maximum(np.real(np.einsum("ij,ik,kj->j", Y.conj(), gram, Y)), 0.0))
    else:
        xnorm = np.linalg.norm(dec.U @ Y, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        est = rnorm * coef / xnorm
    return np.where(xnorm > 0, est, np.inf)


def compress(dec, sf: SchurForm, ell=None, counters=None):
    """Order-``ell`` Krylov decomposition from the leading Schur block.

    ``U_l = U V_l``, ``H_l = S_l``, the residual direction is kept and
    ``c_l = V_l^H c``.  The returned object has the same kind as ``dec``; a
    corrected decomposition gives a randomized one when it carries a
    sketch (the kept residual column is then orthogonal to ``range(U_l)``
    but not Omega-orthogonal) and an orthonormal one otherwise.
    """
    ell = sf.selected if ell is None else ell
    V = sf.V[:, :ell]
    U = dec.U @ V
    H = sf.S[:ell, :ell].copy()
    c = V.conj().T @ dec.c
    if counters is not None:
        n, m = dec.U.shape
        counters.restart_flops += 8 * n * m * ell
    if isinstance(dec, CorrectedKrylovDecomposition):
        nxt, s_nxt, sk, SU = dec.uhat, dec.s_uhat, dec.sketch, dec.SU
        ortho = "rgs"
    else:
        nxt = dec.next
        sk = getattr(dec, "sketch", None)
        s_nxt = getattr(dec, "s_next", None)
        SU = getattr(dec, "SU", None)
        ortho = dec.ortho
    if sk is not None:
        return RandomizedKrylovDecomposition(
            U, H, nxt.copy(), c, sk, SU=SU @ V, s_next=s_nxt.copy(), beta=dec.beta,
            ortho=ortho if ortho in ("rgs", "rcgs2") else "rgs")
    return OrthonormalKrylovDecomposition(U, H, nxt.copy(), c, beta=dec.beta,
                                          ortho=getattr(dec, "ortho", "cgs2"))


def sketched_reorthogonalize(dec: RandomizedKrylovDecomposition, index, counters=None):
    """One randomized Gram-Schmidt step on column ``index`` (0-based), in place.

    The column is Omega-orthogonalized against all other columns and
    Omega-normalized: ``U' = U T`` with ``T`` the identity except in column
    ``index``.  The identity is kept by ``H' = T^{-1} H T`` and
    ``c' = T^H c``.
    """
    U, SU = dec.U, dec.SU
    m = dec.order
    others = [j for j in range(m) if j != index]
    s = SU[:, index]
    r = SU[:, others].conj().T @ s
    w = U[:, index] - U[:, others] @ r
    sw = s - SU[:, others] @ r
    eta = np.linalg.norm(sw)
    if eta <= 1e-14 * max(np.linalg.norm(s), np.finfo(float).tiny):
        raise Breakdown("column is numerically in the span of the others")
    dtype = np.result_type(dec.H, r, dec.c)
    T = np.eye(m, dtype=dtype)
    Tinv = np.eye(m, dtype=dtype)
    T[others, index] = -r / eta
    T[index, index] = 1.0 / eta
    Tinv[others, index] = r
    Tinv[index, index] = eta
    dec._U[:, index] = w / eta
    dec._SU[:, index] = sw / eta
    dec.H = Tinv @ dec.H @ T
    dec.c = T.conj().T @ dec.c
    dec._reset_qr()
    if counters is not None:
        n = dec.n
        counters.vector_updates += m - 1
        counters.orth_flops += 2 * n * (m - 1)
    return dec


def initial_vector(n, seed, dtype=float):
    """Seeded Gaussian start vector; the stream is independent of the sketch's."""
    b_seq, _ = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(b_seq)
    b = rng.standard_normal(n)
    if np.issubdtype(np.dtype(dtype), np.complexfloating):
        b = b + 1j * rng.standard_normal(n)
    return b


def sketch_seed(seed):
    """Integer seed for the sketch derived from the run seed."""
    _, s_seq = np.random.SeedSequence(seed).spawn(2)
    return int(s_seq.generate_state(1, dtype=np.uint64)[0])


def krylov_schur(A, cfg: Optional[EigConfig] = None, b=None, counters=None,
                 callback: Optional[Callable[[CycleState], None]] = None, sketch=None):
    """Compute ``cfg.k`` wanted eigenpairs of ``A``.

    Returns ``(RitzSet, CycleTrace)``.  Without convergence inside the
    matvec/cycle budget the best current set is returned with
    ``converged=False`` (or :class:`NotConverged` is raised when
    ``cfg.strict``).
    """
    cfg = cfg or EigConfig()
    A = aslinearoperator(A)
    n = A.n
    if cfg.m > n:
        raise ConfigError(f"order m={cfg.m} exceeds problem size n={n}")
    counters = counters if counters is not None else Counters()
    counters.start()
    if b is None:
        b = initial_vector(n, cfg.seed)
    if cfg.randomized and sketch is None:
        sketch = build_sketch(cfg.d, n, cfg.xi, seed=sketch_seed(cfg.seed))

    ortho = cfg.orthogonalization
    notes: List[str] = []
    if cfg.randomized:
        dec = randomized_arnoldi(A, b, cfg.m, sketch, ortho=ortho, counters=counters)
    else:
        dec = arnoldi(A, b, cfg.m, ortho=ortho, counters=counters)

    trace = CycleTrace(cfg.variant)
    cycle = 0
    while True:
        cycle += 1
        cor = None
        work = dec
        gram = None
        if cfg.variant == "srr-ks":
            cor = correct(dec, cfg.solver, counters=counters)
            work, gram = cor, cor.gram
        order = work.order
        max_ell = max(order - 1, 1)
        ell_req = min(cfg.ell, max_ell)
        evals = np.linalg.eigvals(work.H) if order else np.zeros(0)
        ell = selection_size(evals, cfg.which, ell_req, max_ell)
        if ell != ell_req:
            msg = f"cycle {cycle}: widened ell from {ell_req} to {ell} to keep a tied cluster together"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
        sf = schur(work.H, cfg.which, ell)
        # the wanted set is widened across ties too, so it never holds half
        # of a conjugate pair
        kk = selection_size(evals, cfg.which, min(cfg.k, ell), ell)
        res = residual_estimates(work, sf, kk, gram=gram)
        theta = np.diag(sf.S)[:kk].copy()
        scale = np.maximum(np.abs(theta), np.finfo(float).tiny)
        done = bool(np.all(res <= cfg.tol * scale)) and kk >= cfg.k
        trace.records.append(CycleRecord(
            cycle, order, ell, counters.matvecs, counters.inner_products,
            theta, res, counters.snapshot()))
        if callback is not None:
            callback(CycleState(cycle, dec, cor, sf, counters))

        stop_reason = None
        if done:
            stop_reason = "converged"
        elif dec.breakdown:
            stop_reason = "breakdown"
        elif counters.matvecs + (cfg.m - ell) > cfg.matvec_cap:
            stop_reason = "max_matvecs"
        elif cfg.max_cycles is not None and cycle >= cfg.max_cycles:
            stop_reason = "max_cycles"
        if stop_reason is not None:
            basis = work.U @ sf.V[:, :kk]
            counters.stop()
            result = RitzSet(theta, basis, res, cycle, counters.matvecs, done, notes)
            if not done:
                msg = f"stopped after {cycle} cycles ({stop_reason}) without convergence"
                notes.append(msg)
                if cfg.strict:
                    raise NotConverged(msg)
            return result, trace

        dec = compress(work, sf, ell, counters=counters)
        try:
            expand(dec, A, cfg.m - ell, counters=counters)
            if cfg.reorthogonalize and cfg.variant == "srr-ks":
                sketched_reorthogonalize(dec, ell, counters=counters)
        except Breakdown as exc:
            notes.append(f"cycle {cycle}: {exc}")
            dec.breakdown = True
