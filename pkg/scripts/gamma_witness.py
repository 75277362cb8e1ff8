"""Sweep eps and show how the floored energy stays bounded while J_0 diverges.

Usage: python3 scripts/gamma_witness.py [--L 3] [--m 1] [--tmax 60] [--out sweep.csv]
"""
import argparse
import csv
import sys

import numpy as np

from epsams.gammalab import descent_sequence, floor_comparison, make_degenerate_image


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--L", type=int, default=3)
    parser.add_argument("--m", type=int, default=1)
    parser.add_argument("--tmax", type=int, default=60)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--eta", type=float, default=1e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="optional CSV of the full sweep")
    args = parser.parse_args(argv)

    img, basis, _ = make_degenerate_image(args.size, args.size, args.L, args.m, seed=args.seed)
    mask = np.ones((img.height, img.width), dtype=bool)
    mean = img.spectra().mean(axis=0)
    j0 = descent_sequence(img, mask, mean, basis, args.m, args.tmax, eta=args.eta)
    print(f"J_0 at t=0: {j0[0].total:.6g}   at t={args.tmax}: {j0[-1].total:.6g}")

    rows = [["eps", "t", "j0", "j_eps"]]
    print(f"{'eps':>8} {'t_cross':>8} {'finite min':>14} {'lower bound':>14}")
    for eps in [1e-1, 1e-2, 1e-3, 1e-4]:
        rep = floor_comparison(img, mask, mean, basis, args.m, eps, args.tmax, eta=args.eta)
        print(f"{eps:8.0e} {str(rep.t_cross):>8} {rep.finite_min:14.6g} {rep.bound:14.6g}")
        rows += [[eps, r0.t, r0.total, re.j_eps] for r0, re in zip(j0, rep.rows)]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
