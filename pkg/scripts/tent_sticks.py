#!/usr/bin/env python3
"""Per-stick sensitivity constants of the tent-with-sticks system.

For each branch k the point at relative height 3/10 is perturbed ``--samples``
times within ``--radius`` and the largest tail Birkhoff mean distance is kept.
Prints a CSV ``k,constant,k_times_constant``; the last column should stay
roughly flat if the constants scale like 1/k.
"""
import argparse
import csv
import sys
from fractions import Fraction

from meanlab.diagnostics import stick_constants


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sticks", default="1,2,5,10,25", help="comma-separated branch indices")
    ap.add_argument("--horizon", type=int, default=10 ** 4)
    ap.add_argument("--tail-start", type=int, default=10 ** 3)
    ap.add_argument("--radius", type=Fraction, default=Fraction(1, 1000))
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    ks = [int(v) for v in args.sticks.split(",")]
    consts = stick_constants(ks, args.horizon, args.tail_start, args.radius, args.samples, seed=args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["k", "constant", "k_times_constant"])
    for k in ks:
        w.writerow([k, f"{float(consts[k]):.6f}", f"{float(k * consts[k]):.6f}"])


if __name__ == "__main__":
    main()
