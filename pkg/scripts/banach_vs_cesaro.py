#!/usr/bin/env python3
"""Cesaro versus Banach averages on two examples.

1. The burst set F = U_k [2^k, 2^k + k): upper density tends to 0 while the
   upper Banach density (window floor W) is 1.
2. The Theorem-4 point x against sigma^j x, with j the start of a long zero
   run: the Banach window mean of the distance profile exceeds its Cesaro mean.
"""
import argparse

from meanlab.construction import default_base, synthesize_schedule, theorem4_point
from meanlab.density import IndexSet, banach_upper_density, builtin_predicate, upper_density
from meanlab.diagnostics import banach_window, birkhoff_profile
from meanlab.systems import ShiftSystem


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=10 ** 6)
    ap.add_argument("--window-floor", type=int, default=19)
    ap.add_argument("--pair-horizon", type=int, default=10 ** 5)
    ap.add_argument("--pair-window", type=int, default=1000)
    args = ap.parse_args(argv)

    F = IndexSet.from_predicate(builtin_predicate("bursts"), args.horizon, "bursts")
    up = upper_density(F, args.horizon)
    ban = banach_upper_density(F, args.horizon, args.window_floor)
    print(f"bursts N={args.horizon}: upper density {up.value} ~ {float(up.value):.3e}, "
          f"upper Banach density (W={args.window_floor}) {ban.value}")

    s = synthesize_schedule(default_base(), 6)
    x = theorem4_point(s)
    j = s.block_length(3)
    prof = birkhoff_profile(ShiftSystem(), x, x.shift(j), args.pair_horizon, 100)
    ces = prof.mean(0, args.pair_horizon)
    bw = banach_window(prof, args.pair_window)
    print(f"theorem-4 pair (x, sigma^{j} x), N={args.pair_horizon}: Cesaro mean {float(ces):.4f}, "
          f"Banach window mean {float(bw.value):.4f} on [{bw.start}, {bw.start + bw.length})")


if __name__ == "__main__":
    main()
