"""Distortion of the sparse sign sketch on random m-dimensional subspaces."""

import argparse

from srrarnoldi.cli import embed_check


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--d", type=int, nargs="+", default=[100, 200, 400, 800])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    _, per_d = embed_check(args.n, args.m, args.d, trials=args.trials, seed=args.seed)
    print(f"{'d':>5} {'median':>8} {'max':>8}")
    for d in args.d:
        print(f"{d:5d} {per_d[d]['median']:8.3f} {per_d[d]['max']:8.3f}")


if __name__ == "__main__":
    main()
