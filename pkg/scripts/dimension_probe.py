"""How the standardized Fisher deviation of diagonal matrix mixtures grows with dimension.

    python3 scripts/dimension_probe.py --n 64
"""

import argparse

from mixlab.cltlab import diagonal_probe
from mixlab.mixers import ScalarMixerAtomic

COORDS = [ScalarMixerAtomic([1.0, 2.0], [0.5, 0.5]), ScalarMixerAtomic([0.5, 3.0], [0.9, 0.1])]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--delta", type=float, default=0.5)
    args = ap.parse_args()
    for row in diagonal_probe(COORDS, args.n, dims=(1, 2, 4, 8, 16), delta=args.delta):
        ratio = row["deviation"] / (row["log_factor"] * row["predictor"])
        print(f"d={row['d']:<3} deviation {row['deviation']:.4e}  log^delta(d+1) {row['log_factor']:.3f}  "
              f"normalized {ratio:.4e}")


if __name__ == "__main__":
    main()
