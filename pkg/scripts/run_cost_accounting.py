"""Orthogonalization cost of KS, RKS and SRR-KS on one synthetic problem."""

import argparse

from srrarnoldi.counters import Counters
from srrarnoldi.eigsolve import EigConfig, initial_vector, krylov_schur
from srrarnoldi.problems import SpectrumSpec, synthetic_operator


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--f", default="f1")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    A = synthetic_operator(args.n, SpectrumSpec(f=args.f), transform="dct", seed=args.seed)
    b = initial_vector(args.n, args.seed)
    base = None
    print(f"{'variant':>8} {'cycles':>6} {'orth':>10} {'correction':>10} {'ratio':>6}")
    for v in ("ks", "rks", "srr-ks"):
        c = Counters()
        ritz, _ = krylov_schur(A, EigConfig(variant=v, k=10, m=40, ell=20, d=100,
                                            seed=args.seed), b=b, counters=c)
        base = base or c.orthogonalization_flops
        print(f"{v:>8} {ritz.cycles:6d} {c.orth_flops:10.3g} {c.correction_flops:10.3g} "
              f"{c.orthogonalization_flops / base:6.3f}")


if __name__ == "__main__":
    main()
