"""Repeated-LOOCV RMSE of the severity regressors on synthetic linear projects.

    python3 scripts/small_data_regression.py --sizes 5 10 20 40 --reps 50
"""

import argparse

import numpy as np

from procscore.assessment import RegressorSpec, loocv
from procscore.synthetic import linear_projects


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20, 40])
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--noise-features", type=int, default=0)
    ap.add_argument("--specs", nargs="+", default=["ridge(0.001)", "ridge(1)", "knn(3)", "zero_rule"])
    ap.add_argument("--smote", action="store_true", help="add n synthetic SMOTE instances per fold")
    args = ap.parse_args(argv)

    print(f"median LOOCV RMSE / sigma  (sigma={args.sigma}, {args.reps} datasets per size)")
    print("spec".ljust(16) + "".join(f"n={n}".rjust(9) for n in args.sizes))
    for text in args.specs:
        base = RegressorSpec.parse(text)
        cells = []
        for n in args.sizes:
            spec = RegressorSpec(**{**base.to_dict(), "smote_new": n if args.smote else 0})
            rmses = [loocv(*linear_projects(n, args.sigma, 1000 * n + rep, args.noise_features), spec,
                           repeats=3 if args.smote else 1, seed=rep).mean_rmse
                     for rep in range(args.reps)]
            cells.append(np.median(rmses) / args.sigma)
        print(text.ljust(16) + "".join(f"{c:9.3f}" for c in cells))


if __name__ == "__main__":
    main()
