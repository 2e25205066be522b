"""Run the acceptance battery and print one line per report.

    python3 scripts/run_suite.py --seed 7 --blocks calibration,schur
"""

import argparse
import time

from mixlab import battery


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--blocks", help="comma-separated subset of " + ",".join(battery.BLOCKS))
    args = ap.parse_args()
    names = args.blocks.split(",") if args.blocks else list(battery.BLOCKS)
    for block in names:
        t0 = time.perf_counter()
        reports = battery.BLOCKS[block](args.seed)
        dt = time.perf_counter() - t0
        for name, r in reports.items():
            print(f"{'PASS' if r.passed else 'FAIL'}  {block:<20} {name:<28} n={r.instances_tested:<6} "
                  f"worst={r.worst_margin:+.3e} tol={r.tolerance:.1e}  ({dt:.1f}s)")


if __name__ == "__main__":
    main()
