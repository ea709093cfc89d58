"""Operation counters used as a portable stand-in for wall-clock timing.

Flop-equivalents follow the real-arithmetic model: an inner product or an
axpy of length ``n`` costs ``2n``; forming the Gram matrix of an ``n x m``
basis while exploiting symmetry costs ``m (m + 1) n``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields

# order of the CSV columns in counter reports
COUNTER_FIELDS = (
    "matvecs",
    "inner_products",
    "vector_updates",
    "sketch_applications",
    "orth_flops",
    "correction_flops",
    "gram_flops",
    "cholesky_flops",
    "corrections",
    "inner_solver_iterations",
    "restart_flops",
)


@dataclass
class Counters:
    matvecs: int = 0
    inner_products: int = 0
    vector_updates: int = 0
    sketch_applications: int = 0
    # Gram-Schmidt / randomized Gram-Schmidt work on length-n vectors
    orth_flops: float = 0.0
    # least-squares correction: Gram matrix, U^H u, U h, Cholesky, solves
    correction_flops: float = 0.0
    gram_flops: float = 0.0
    cholesky_flops: float = 0.0
    corrections: int = 0
    inner_solver_iterations: int = 0
    # U_m V_l products when compressing
    restart_flops: float = 0.0
    wall_time: float = 0.0
    _t0: float = field(default=None, repr=False, compare=False)

    def start(self):
        self._t0 = time.perf_counter()
        return self

    def stop(self):
        if self._t0 is not None:
            self.wall_time += time.perf_counter() - self._t0
            self._t0 = None
        return self

    @property
    def orthogonalization_flops(self):
        """Basis orthogonalization plus the similarity-restoring correction."""
        return self.orth_flops + self.correction_flops

    def snapshot(self):
        d = {f: getattr(self, f) for f in COUNTER_FIELDS}
        d["orthogonalization_flops"] = self.orthogonalization_flops
        return d

    def as_dict(self):
        d = self.snapshot()
        d["wall_time"] = self.wall_time
        return d

    def __add__(self, other):
        out = Counters()
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            setattr(out, f.name, getattr(self, f.name) + getattr(other, f.name))
        return out
