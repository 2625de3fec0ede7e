"""Locate Landau-Stuart zero crossings of lambda_max and fit J = C sqrt(2 D_ext).

Writes locus.csv and fit.json into --out.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from noisesync.bifurcation import (
    LyapunovSettings,
    default_workers,
    evaluate_point,
    fit_power_law,
    j_scan_for_ratio,
    locate_d_bifurcation,
    log_axis,
    write_locus_csv,
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=6.0)
    ap.add_argument("--d-range", type=float, nargs=2, default=(1e-5, 1e-2))
    ap.add_argument("--n-d", type=int, default=6)
    ap.add_argument("--s-range", type=float, nargs=2, default=(0.5, 2.5),
                    help="scan range of sqrt(2 D) / J")
    ap.add_argument("--n-scan", type=int, default=10)
    ap.add_argument("--horizon", type=float, default=1e5, help="in relaxation times")
    ap.add_argument("--intensity-cap", type=float, default=None,
                    help="drop crossings whose mean |E|^2 departs from J by this fraction")
    ap.add_argument("--seed", type=int, default=6)
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("--out", default="out/power_law")
    a = ap.parse_args(argv)

    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    settings = LyapunovSettings(horizon=a.horizon, relative=True, dt=0.01)
    loc = locate_d_bifurcation("landau_stuart", a.alpha, log_axis(*a.d_range, a.n_d),
                               j_scan_for_ratio(np.geomspace(*a.s_range, a.n_scan)), "J", settings,
                               base_seed=a.seed, workers=a.workers)
    write_locus_csv(loc, out / "locus.csv")
    pts = [p for p in loc.points if p.bracket_valid]
    triples = [(p.fixed_value, p.crossing, p.branch) for p in pts]
    intensities = None
    if a.intensity_cap is not None:
        # mean intensity from a fresh estimate at the crossing itself
        intensities = [evaluate_point("landau_stuart", a.alpha, p.fixed_value, p.crossing, a.seed, settings)
                       ["mean_intensity"] for p in pts]
    fits = fit_power_law(triples, intensity_cap=a.intensity_cap, intensities=intensities)
    summary = {str(b): {"slope": f.slope, "slope_stderr": f.slope_stderr, "C": f.C, "C_free": f.C_free, "n": f.n}
               for b, f in fits.items()}
    (out / "fit.json").write_text(json.dumps(summary, indent=1))
    for b, f in fits.items():
        print(f"branch {b}: slope {f.slope:.4f} +- {f.slope_stderr:.4f}, C {f.C:.4f} ({f.n} points)")


if __name__ == "__main__":
    main()
