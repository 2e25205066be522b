"""Grid minimization of I(sum a_i X_i) over unit weights for several i.i.d. scalar mixtures.

    python3 scripts/min_fisher_scan.py --grid-step 0.05
"""

import argparse

from mixlab.fishmin import check_fisher_envelope, minimize_fisher
from mixlab.mixture import scalar_mixture

MODELS = {
    "sigma_1_2": scalar_mixture([1.0, 2.0]),
    "sigma_1_5_skewed": scalar_mixture([1.0, 5.0], [0.8, 0.2]),
    "three_atom": scalar_mixture([0.3, 1.0, 3.0], [0.3, 0.4, 0.3]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid-step", type=float, default=1 / 40)
    ap.add_argument("--n-max", type=int, default=4)
    args = ap.parse_args()
    for name, model in MODELS.items():
        for n in range(2, args.n_max + 1):
            res = minimize_fisher(model, n, grid_step=args.grid_step)
            env = check_fisher_envelope(model, res)
            point = ", ".join(f"{q:.3f}" for q in res.best_squares)
            print(f"{name:<18} n={n}  min I = {res.best_value:.8f} at q = ({point})  "
                  f"envelope {'ok' if env.passed else 'VIOLATED'}")


if __name__ == "__main__":
    main()
