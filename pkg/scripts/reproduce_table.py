"""Optimal slot fractions at ell = 32 next to honest play, plus the alpha = 0.2 values."""
import argparse

import numpy as np

from randao import ModelParams, improvement_over_honest, policy_iteration

ALPHAS = (0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ell", type=int, default=32)
    args = ap.parse_args()

    print(f"{'alpha':>6}  {'optimal %':>10}  {'improvement %':>13}  iters")
    for a in ALPHAS:
        p = ModelParams(a, args.ell)
        res = policy_iteration(p)
        imp = 100 * improvement_over_honest(res, p)
        print(f"{100 * a:5.0f}%  {100 * res.fraction:10.5f}  {imp:13.3f}  {res.iterations:5d}")

    res = policy_iteration(ModelParams(0.2, args.ell))
    print("\nvalues at alpha = 0.2:")
    print(", ".join(f"{v:.2f}" for v in np.round(res.bias, 2)))


if __name__ == "__main__":
    main()
