"""Cauchy entropy and Fisher information from atomized stable mixers, i.i.d. versus Sobol atoms.

    python3 scripts/calibration.py --seeds 5
"""

import argparse
import math

import numpy as np

from mixlab.infofn import entropy, fisher_information
from mixlab.mixers import StableMixerSpec, atomize
from mixlab.mixture import as_mixture


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--log2m", type=int, nargs="+", default=[10, 12, 14])
    args = ap.parse_args()
    h_true, i_true = math.log(4 * math.pi), 0.5
    for method in ("iid", "qmc"):
        for k in args.log2m:
            errs = []
            for s in range(args.seeds):
                mix = as_mixture(atomize(StableMixerSpec("positive-stable-power", 1.0, s), 2**k, method=method))
                errs.append((entropy(mix).value - h_true, fisher_information(mix).value - i_true))
            e = np.abs(np.array(errs))
            print(f"{method:<4} m=2^{k:<3} max|dh| = {e[:, 0].max():.2e}  max|dI| = {e[:, 1].max():.2e}")


if __name__ == "__main__":
    main()
