"""Krylov approximations of ``f(A) b``.

Three variants, evaluated every ``check_interval`` iterations:

``'standard'``    ``f_m = Q f(G) ||b|| e_1`` from orthonormal Arnoldi (CGS2);
``'randomized'``  ``f_m = U f(H) ||Omega b|| e_1`` from randomized Arnoldi;
``'srr'``         ``f_m = U f(Hhat) ||Omega b|| e_1`` where ``Hhat`` comes from
                  a similarity-restoring correction of the current randomized
                  decomposition.  The correction is thrown away afterwards and
                  the uncorrected decomposition keeps growing.

The ``'srr'`` and ``'standard'`` iterates coincide in exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .counters import Counters
from .errors import ConfigError, DomainError, NotConverged
from .krylov import arnoldi, expand, randomized_arnoldi
from .linalg import schur, triangular_function
from .operators import aslinearoperator
from .restore import CorrectionSolver, correct
from .sketch import DEFAULT_XI, build_sketch

__all__ = [
    "ScalarFunction",
    "builtin_functions",
    "get_function",
    "MatFunConfig",
    "Checkpoint",
    "MatFunResult",
    "eval_small_matfun",
    "matfun_arnoldi",
    "reference_solution",
]

MATFUN_VARIANTS = ("standard", "randomized", "srr")


def _off_negative_axis(z):
    # principal branch: undefined on (-inf, 0]
    z = np.asarray(z, dtype=complex)
    on_axis = np.abs(z.imag) <= 1e-12 * np.abs(z)
    return ~(on_axis & (z.real <= 0))


def _everywhere(z):
    return np.ones(np.shape(z), dtype=bool)


@dataclass(frozen=True)
class ScalarFunction:
    """A scalar function with its domain.

    ``conj_symmetric`` marks ``f(conj z) = conj f(z)``, which lets real
    projected matrices produce real results.
    """

    tag: str
    evaluator: Callable = field(repr=False, compare=False)
    domain: Callable = field(default=_everywhere, repr=False, compare=False)
    conj_symmetric: bool = True
    params: tuple = ()

    def __call__(self, z):
        z = np.asarray(z)
        if not np.all(self.domain(z)):
            raise DomainError(f"{self.tag} undefined at some argument")
        return self.evaluator(z)

    @classmethod
    def power(cls, alpha):
        alpha = float(alpha)
        if alpha == int(alpha) and alpha >= 0:
            return cls(f"power({alpha:g})", lambda z, a=int(alpha): np.asarray(z, complex) ** a,
                       params=(alpha,))
        return cls(f"power({alpha:g})", lambda z, a=alpha: np.exp(a * np.log(np.asarray(z, complex))),
                   _off_negative_axis, params=(alpha,))

    @classmethod
    def constant(cls, value=1.0):
        return cls(f"constant({value:g})",
                   lambda z, v=value: np.full(np.shape(z), v, dtype=complex),
                   conj_symmetric=np.isreal(value), params=(value,))

    @classmethod
    def custom(cls, evaluator, domain=None, tag="custom", conj_symmetric=False):
        return cls(tag, evaluator, domain or _everywhere, conj_symmetric)


def builtin_functions():
    """Catalog of named scalar functions.

    Besides the matrix-function targets it holds the spectrum generators
    ``f1..f4`` used by the synthetic test problems.
    """
    c = lambda z: np.asarray(z, dtype=complex)  # noqa: E731
    return {
        "sqrt": ScalarFunction("sqrt", lambda z: np.sqrt(c(z)), _off_negative_axis),
        "invsqrt": ScalarFunction("invsqrt", lambda z: 1.0 / np.sqrt(c(z)), _off_negative_axis),
        "log": ScalarFunction("log", lambda z: np.log(c(z)), _off_negative_axis),
        "exp": ScalarFunction("exp", lambda z: np.exp(c(z))),
        "identity": ScalarFunction("identity", lambda z: c(z).copy()),
        "constant": ScalarFunction.constant(1.0),
        "f1": ScalarFunction("f1", lambda a: np.exp(c(a) / 10.0)),
        "f2": ScalarFunction("f2", lambda a: np.log(c(a) + 1.0),
                             lambda a: _off_negative_axis(c(a) + 1.0)),
        "f3": ScalarFunction("f3", lambda a: 1.0 + 1.0 / c(a) ** 2, lambda a: c(a) != 0),
        "f4": ScalarFunction("f4", lambda a: np.exp(c(a) * math.log(0.99))),
    }


def get_function(name):
    """Look up a builtin by name; ``'power:0.5'`` builds a power function."""
    if isinstance(name, ScalarFunction):
        return name
    if name.startswith("power"):
        alpha = name.split(":", 1)[1] if ":" in name else name[6:-1]
        return ScalarFunction.power(float(alpha))
    cat = builtin_functions()
    if name not in cat:
        raise ConfigError(f"unknown function {name!r}; choose from {sorted(cat)} or power:<alpha>")
    return cat[name]


@dataclass
class MatFunConfig:
    """Parameters of an ``f(A) b`` run.

    ``tol`` is compared with the error against ``reference`` when one is
    supplied and with the relative change between consecutive checkpoints
    otherwise; ``tol = 0`` runs all ``M`` iterations.
    """

    variant: str = "srr"
    M: int = 100
    check_interval: int = 10
    tol: float = 0.0
    d: Optional[int] = None
    xi: int = DEFAULT_XI
    seed: int = 0
    solver: CorrectionSolver = field(default_factory=CorrectionSolver)
    ortho: Optional[str] = None

    def __post_init__(self):
        self.variant = self.variant.lower()
        if isinstance(self.solver, dict):
            self.solver = CorrectionSolver(**self.solver)
        if self.d is None:
            self.d = 2 * self.M
        self.validate()

    @property
    def randomized(self):
        return self.variant != "standard"

    @property
    def orthogonalization(self):
        return self.ortho or ("rcgs2" if self.randomized else "cgs2")

    def validate(self):
        if self.variant not in MATFUN_VARIANTS:
            raise ConfigError(f"variant must be one of {MATFUN_VARIANTS}, got {self.variant!r}")
        if not 1 <= self.check_interval <= self.M:
            raise ConfigError("need 1 <= check_interval <= M")
        if self.randomized and self.M > self.d:
            raise ConfigError(f"randomized variants need M <= d, got M={self.M}, d={self.d}")
        if self.tol < 0:
            raise ConfigError("tol must be nonnegative")

    def to_dict(self):
        d = asdict(self)
        d["solver"] = asdict(self.solver)
        return d


@dataclass
class Checkpoint:
    m: int
    error: float = float("nan")
    change: float = float("nan")
    inner_solver_iterations: int = 0
    domain_error: bool = False
    counters: dict = field(default_factory=dict)


@dataclass
class MatFunResult:
    approx: np.ndarray
    iterations: int
    converged: bool
    trace: List[Checkpoint]
    history: List[np.ndarray] = field(default_factory=list, repr=False)
    notes: List[str] = field(default_factory=list)

    @property
    def errors(self):
        return np.array([c.error for c in self.trace])

    @property
    def checkpoints(self):
        return np.array([c.m for c in self.trace])


def _real_if_exact(F, *inputs):
    if all(not np.iscomplexobj(x) for x in inputs):
        return F.real
    return F


def eval_small_matfun(H, f, first_column_only=False):
    """``f(H) = V f(S) V^H`` through a complex Schur form and Parlett.

    With ``first_column_only`` only ``f(H) e_1`` is returned.  Real ``H``
    with a conjugation-symmetric ``f`` gives a real result.
    """
    H = np.asarray(H)
    m = H.shape[0]
    if m == 0:
        return np.zeros((0,) if first_column_only else (0, 0))
    sf = schur(H)
    F = triangular_function(sf.S, f)
    if first_column_only:
        out = sf.V @ (F @ sf.V[0, :].conj())
    else:
        out = sf.V @ F @ sf.V.conj().T
    if getattr(f, "conj_symmetric", False):
        out = _real_if_exact(out, H)
    return out


def matfun_arnoldi(A, b, f, cfg: Optional[MatFunConfig] = None, reference=None,
                   counters=None, sketch=None, keep_history=False, callback=None):
    """Approximate ``f(A) b`` with checkpoints every ``cfg.check_interval`` steps.

    ``reference`` (optional) is the target vector used for the error trace.
    ``callback(m, H)`` sees the projected matrix used at each checkpoint
    (``Hhat`` for the corrected variant).
    A :class:`DomainError` of the randomized variant is recorded in the trace
    (error ``nan``) instead of being raised; the other variants raise it.
    """
    cfg = cfg or MatFunConfig()
    f = get_function(f) if isinstance(f, str) else f
    A = aslinearoperator(A)
    counters = counters if counters is not None else Counters()
    counters.start()
    n = A.n
    b = np.asarray(b)
    if cfg.M > n:
        raise ConfigError(f"M={cfg.M} exceeds problem size n={n}")
    ortho = cfg.orthogonalization
    if cfg.randomized:
        if sketch is None:
            sketch = build_sketch(cfg.d, n, cfg.xi, seed=cfg.seed)
        dec = randomized_arnoldi(A, b, 0, sketch, ortho=ortho, counters=counters)
    else:
        dec = arnoldi(A, b, 0, ortho=ortho, counters=counters)
    ref_norm = np.linalg.norm(reference) if reference is not None else None

    trace: List[Checkpoint] = []
    history = []
    notes = []
    prev = None
    approx = np.zeros(n, dtype=np.result_type(b, float))
    converged = False
    while dec.order < cfg.M and not dec.breakdown:
        steps = min(cfg.check_interval - dec.order % cfg.check_interval, cfg.M - dec.order)
        expand(dec, A, steps, counters=counters)
        m = dec.order
        its_before = counters.inner_solver_iterations
        cp = Checkpoint(m)
        try:
            if cfg.variant == "srr":
                cor = correct(dec.copy(), cfg.solver, counters=counters)
                H = cor.Hhat
            else:
                H = dec.H
            if callback is not None:
                callback(m, H)
            fe1 = eval_small_matfun(H, f, first_column_only=True)
            x = dec.U @ (dec.beta * fe1)
        except DomainError as exc:
            if cfg.variant != "randomized":
                raise
            cp.domain_error = True
            notes.append(f"m={m}: {exc}")
            x = np.full(n, np.nan, dtype=complex)
        if not cp.domain_error and not np.iscomplexobj(b) and not np.iscomplexobj(dec.U) \
                and np.iscomplexobj(x):
            x = x.real
        cp.inner_solver_iterations = counters.inner_solver_iterations - its_before
        if reference is not None:
            cp.error = float(np.linalg.norm(x - reference) / ref_norm)
        if prev is not None:
            cp.change = float(np.linalg.norm(x - prev) / max(np.linalg.norm(x), np.finfo(float).tiny))
        cp.counters = counters.snapshot()
        trace.append(cp)
        if keep_history:
            history.append(x)
        approx, prev = x, x
        if cfg.tol > 0:
            crit = cp.error if reference is not None else cp.change
            if crit <= cfg.tol:
                converged = True
                break
    if dec.breakdown and not converged:
        # exact invariant subspace: the last iterate is exact
        converged = True
        notes.append(f"breakdown at m={dec.order}: Krylov space is invariant")
    counters.stop()
    return MatFunResult(approx, dec.order, converged, trace, history, notes)


def reference_solution(A, b, f, tol=1e-8, max_m=None, check_interval=10):
    """High-accuracy ``f(A) b``.

    Uses the operator's exact evaluation when it offers one (synthetic
    operators without coupling); otherwise runs standard Arnoldi until two
    consecutive checkpoints differ by at most ``tol`` relative.
    """
    f = get_function(f) if isinstance(f, str) else f
    exact = getattr(A, "exact_function", None)
    if exact is not None:
        try:
            return exact(f, b)
        except NotImplementedError:
            pass
    A = aslinearoperator(A)
    max_m = max_m or min(A.n, 500)
    cfg = MatFunConfig("standard", M=max_m, check_interval=min(check_interval, max_m), tol=tol)
    res = matfun_arnoldi(A, b, f, cfg)
    if not res.converged:
        raise NotConverged(f"reference did not reach relative change {tol} within {max_m} steps")
    return res.approx
