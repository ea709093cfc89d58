"""Similarity-restoring randomized Arnoldi.

Randomized Arnoldi builds a well-conditioned, sketch-orthonormal Krylov
basis cheaply; one least-squares correction then recovers a projected
matrix similar to the one standard Arnoldi would give.  The package offers
the building blocks, a restarted Krylov-Schur eigensolver and ``f(A) b``
approximations, each in standard, randomized and corrected form.
"""

__version__ = "0.1.0"

from .counters import Counters
from .eigsolve import EigConfig, RitzSet, krylov_schur
from .errors import SRRError
from .krylov import arnoldi, expand, randomized_arnoldi
from .matfun import MatFunConfig, ScalarFunction, builtin_functions, matfun_arnoldi
from .operators import DenseOperator, LinearOperator, SparseOperator, aslinearoperator
from .problems import SpectrumSpec, graph_laplacian, load_matrix_market, synthetic_operator
from .restore import CorrectionSolver, associated_orthonormal, correct, fom_solve
from .sketch import SparseSignSketch, build_sketch, measure_distortion

__all__ = [
    "__version__",
    "Counters",
    "EigConfig",
    "RitzSet",
    "krylov_schur",
    "SRRError",
    "arnoldi",
    "expand",
    "randomized_arnoldi",
    "MatFunConfig",
    "ScalarFunction",
    "builtin_functions",
    "matfun_arnoldi",
    "DenseOperator",
    "LinearOperator",
    "SparseOperator",
    "aslinearoperator",
    "SpectrumSpec",
    "graph_laplacian",
    "load_matrix_market",
    "synthetic_operator",
    "CorrectionSolver",
    "associated_orthonormal",
    "correct",
    "fom_solve",
    "SparseSignSketch",
    "build_sketch",
    "measure_distortion",
]
