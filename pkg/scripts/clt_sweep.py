"""Standardized Fisher deviation against n for a few base mixers, with fitted slopes.

    python3 scripts/clt_sweep.py --out clt_sweep.csv
"""

import argparse
import csv

from mixlab.cltlab import CltConfig, c_delta, fit_rate, run_clt
from mixlab.mixers import ScalarMixerAtomic

BASES = {
    "two_atom_1_2": ScalarMixerAtomic([1.0, 2.0], [0.5, 0.5]),
    "two_atom_1_4": ScalarMixerAtomic([1.0, 4.0], [0.5, 0.5]),
    "skewed_two_atom": ScalarMixerAtomic([0.5, 3.0], [0.9, 0.1]),
    "three_atom": ScalarMixerAtomic([0.5, 1.0, 2.0], [0.25, 0.5, 0.25]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max-log2", type=int, default=10, help="largest n is 2**this (even powers only)")
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--out", default="clt_sweep.csv")
    args = ap.parse_args()
    ns = tuple(2**k for k in range(2, args.n_max_log2 + 1, 2))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["base", "n", "deviation", "error_bound", "predictor", "method"])
        for name, base in BASES.items():
            rows = run_clt(CltConfig(base, args.delta, n_values=ns, cap=10**5))
            for r in rows:
                w.writerow([name, r.n, "%.17g" % r.deviation, "%.3g" % r.error_bound, "%.17g" % r.predictor, r.method])
            fit = fit_rate(rows)
            print(f"{name:<16} slope {fit.slope:+.3f} (claimed bound {-c_delta(args.delta):+.3f})  "
                  f"residual {fit.residual:.2e}")


if __name__ == "__main__":
    main()
