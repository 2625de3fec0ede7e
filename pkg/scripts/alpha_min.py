"""Find the smallest shear with a positive Landau-Stuart exponent, then fit both branches there."""

import argparse
import json
from pathlib import Path

import numpy as np

from noisesync.bifurcation import (
    LyapunovSettings,
    default_workers,
    find_alpha_min,
    fit_power_law,
    j_scan_for_ratio,
    locate_d_bifurcation,
    log_axis,
    ls_probe,
    write_locus_csv,
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--range", type=float, nargs=2, default=(5.0, 5.8))
    ap.add_argument("--tol", type=float, default=0.04)
    ap.add_argument("--probe-s", type=float, nargs="+", default=[0.9, 1.0, 1.1, 1.2])
    ap.add_argument("--search-horizon", type=float, default=7e5, help="in relaxation times")
    ap.add_argument("--locus-horizon", type=float, default=2e6, help="in relaxation times")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("--out", default="out/alpha_min")
    a = ap.parse_args(argv)

    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    search = LyapunovSettings(horizon=a.search_horizon, relative=True, dt=0.01)
    am = find_alpha_min("landau_stuart", tuple(a.range), ls_probe(1.0, a.probe_s), search, tol=a.tol,
                        base_seed=a.seed, workers=a.workers)
    print(f"alpha_min {am.alpha_min:.4f}, bracket {am.bracket}, resolution limited {am.resolution_limited}")
    locus = LyapunovSettings(horizon=a.locus_horizon, relative=True, dt=0.01)
    loc = locate_d_bifurcation("landau_stuart", am.alpha_positive, log_axis(1e-5, 1e-1, 5),
                               j_scan_for_ratio(np.geomspace(0.8, 1.35, 9)), "J", locus, base_seed=a.seed,
                               workers=a.workers)
    write_locus_csv(loc, out / "locus.csv")
    pts = [(p.fixed_value, p.crossing, p.branch) for p in loc.points if p.bracket_valid]
    summary = {"alpha_min": am.alpha_min, "bracket": list(am.bracket), "history": am.history}
    try:
        fits = fit_power_law(pts, intensity_cap=None)
        summary["C"] = {str(b): f.C for b, f in fits.items()}
        print("C_j at alpha", am.alpha_positive, summary["C"])
    except ValueError as e:
        print(f"fit failed: {e}")
    (out / "alpha_min.json").write_text(json.dumps(summary, indent=1))


if __name__ == "__main__":
    main()
