"""Laser versus Landau-Stuart exponent signs along D_ext at matched forcing, for a ladder of shears."""

import argparse
import csv
from pathlib import Path

from noisesync.bifurcation import LyapunovSettings, compare_models, default_workers, log_axis


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, nargs="+", default=[1.0, 2.0, 3.0, 4.0, 5.0])
    ap.add_argument("--J", type=float, nargs="+", default=[1.0])
    ap.add_argument("--d-range", type=float, nargs=2, default=(0.05, 5.0))
    ap.add_argument("--n-d", type=int, default=7)
    ap.add_argument("--laser-horizon", type=float, default=200.0)
    ap.add_argument("--ls-horizon", type=float, default=4000.0, help="in relaxation times")
    ap.add_argument("--seed", type=int, default=8)
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("--out", default="out/compare_models")
    a = ap.parse_args(argv)

    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for alpha in a.alpha:
        rep = compare_models(alpha, a.J, log_axis(*a.d_range, a.n_d), LyapunovSettings(horizon=a.laser_horizon),
                             LyapunovSettings(horizon=a.ls_horizon, relative=True), base_seed=a.seed,
                             workers=a.workers)
        rows += rep.rows
        print(f"alpha={alpha:g}: {rep.n_discrepancies} sign discrepancies")
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
