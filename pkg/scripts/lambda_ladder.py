"""Total boundary length and accuracy of the final labeling across a ladder of perimeter weights.

Usage: python3 scripts/lambda_ladder.py [--seeds 5] [--k 3]
"""
import argparse
import sys

from epsams.energy import ModelParams, discrete_perimeter
from epsams.segmentation import pixel_accuracy, run
from epsams.synth import synth_gaussian

LADDER = (0.0, 0.1, 1.0, 10.0)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--size", type=int, default=48)
    parser.add_argument("--separation", type=float, default=2.0)
    args = parser.parse_args(argv)

    print("seed " + " ".join(f"{'lam=' + str(lam):>16}" for lam in LADDER))
    for seed in range(args.seeds):
        img, truth = synth_gaussian(args.size, args.size, 4, args.k, seed=seed, separation=args.separation)
        cells = []
        for lam in LADDER:
            state = run(img, ModelParams(k=args.k, lam=lam), seed=seed)
            per = sum(discrete_perimeter(state.labels == l, img.pixel_area) for l in range(1, args.k + 1))
            cells.append(f"{per:7.0f} / {pixel_accuracy(state.labels, truth, args.k):.3f}")
        print(f"{seed:4d} " + " ".join(f"{c:>16}" for c in cells))
    print("(each cell: total perimeter / pixel accuracy)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
