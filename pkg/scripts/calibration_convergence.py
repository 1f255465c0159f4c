"""How fast the calibrated score transforms settle as more random processes are simulated.

For each seed, one large simulation is run; transforms calibrated on its first
n processes are compared with the one calibrated on all of them by the
sup-norm of the difference of the complementary CDFs in distance space.

    python3 scripts/calibration_convergence.py --seeds 10 --sizes 10 50 200 1000
"""

import argparse
import csv
import sys

import numpy as np

from procscore.deviations import default_feature_defs
from procscore.scoring import DEFAULT_IDEALS, CalibrationConfig, calibrate, simulated_values
from procscore.synthetic import example_process_model


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--reference", type=int, default=10_000, help="processes in the reference run")
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 50, 200, 1000])
    ap.add_argument("--grid", type=int, default=200)
    ap.add_argument("--out", help="CSV output (default stdout)")
    args = ap.parse_args(argv)

    pm, defs = example_process_model(), default_feature_defs()
    rows = []
    for seed in range(args.seeds):
        values = simulated_values(CalibrationConfig(n_processes=args.reference, seed=seed), pm, defs)
        for j, fd in enumerate(defs):
            ideal = DEFAULT_IDEALS[fd.kind]
            ref = calibrate(values[:, j], ideal)
            grid = np.linspace(0.0, ref.distances[-1], args.grid)
            for n in args.sizes:
                t = calibrate(values[:n, j], ideal)
                gap = float(np.max(np.abs(t.score_distance(grid) - ref.score_distance(grid))))
                rows.append([seed, fd.name, n, f"{gap:.6f}", f"{t.ideal:.6f}", f"{ref.ideal:.6f}"])
        print(f"seed {seed} done", file=sys.stderr)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh)
    writer.writerow(["seed", "feature", "n", "sup_norm", "ideal_n", "ideal_ref"])
    writer.writerows(rows)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
