import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisesync import bifurcation as bf
from noisesync.bifurcation import (
    BifurcationLocus,
    CheckpointMismatch,
    LocusPoint,
    LyapunovSettings,
    SweepGrid,
    contiguous_positive_between_negatives,
    find_alpha_min,
    fit_power_law,
    j_scan_for_ratio,
    job_seed,
    load_checkpoint,
    locate_d_bifurcation,
    log_axis,
    ls_probe,
    positive_intervals,
    resume_sweep,
    sweep_lambda,
    write_table_csv,
)
from noisesync.models import LandauStuartParams, LaserParams

QUICK = LyapunovSettings(horizon=50.0, relative=True, n_blocks=10)


# -- synthetic lambda landscape ---------------------------------------------

def wedge(alpha):
    """Positive for |ln s| < w(alpha), with w = sqrt(alpha - 5) above alpha = 5."""
    return math.sqrt(alpha - 5.0) if alpha > 5.0 else -1.0


def fake_point(model, alpha, d_ext, J, seed, settings, gamma=500.0, g=2.765):
    s = math.sqrt(2 * d_ext) / J
    w = wedge(alpha)
    lam = J * ((w * w if w > 0 else -0.2) - math.log(s) ** 2)
    se = 1e-6
    return {"model": model, "alpha": alpha, "d_ext": d_ext, "J": J, "seed": seed, "lambda_max": lam,
            "stderr": se, "mean_intensity": J, "sign": int(np.sign(lam)) if abs(lam) > 2 * se else 0,
            "t_total": 1.0, "status": "ok"}


@pytest.fixture
def synthetic(monkeypatch):
    monkeypatch.setattr(bf, "evaluate_point", fake_point)


def test_locus_recovers_exact_power_law(synthetic):
    alpha = 5.25  # wedge half-width 0.5 in ln s
    D = list(np.geomspace(1e-4, 1e-1, 5))
    loc = locate_d_bifurcation("landau_stuart", alpha, D, j_scan_for_ratio(np.geomspace(0.3, 3.0, 9)), "J",
                               rel_tol=1e-7)
    assert len(loc.branch(1)) == 5 and len(loc.branch(2)) == 5
    assert all(p.bracket_valid for p in loc.points)
    fits = fit_power_law(loc)
    assert fits[1].slope == pytest.approx(1.0, abs=1e-6)
    assert fits[1].C == pytest.approx(math.exp(-0.5), rel=1e-6)
    assert fits[2].C == pytest.approx(math.exp(0.5), rel=1e-6)
    # branch 1 sits at lower J for every D
    for d in D:
        j1 = [p.crossing for p in loc.branch(1) if p.fixed_value == d][0]
        j2 = [p.crossing for p in loc.branch(2) if p.fixed_value == d][0]
        assert j1 < j2


def test_locus_along_d_axis(synthetic):
    loc = locate_d_bifurcation("landau_stuart", 5.25, [1.0], list(np.geomspace(1e-2, 10, 12)), "d_ext",
                               rel_tol=1e-8)
    ds = sorted(d for _, d, _ in loc.as_triples())
    assert ds == pytest.approx([0.5 * math.exp(-1.0), 0.5 * math.exp(1.0)], rel=1e-6)
    # lambda rises with D first: branch 1 is the low-D crossing
    assert [p.branch for p in sorted(loc.points, key=lambda p: p.crossing)] == [1, 2]


def test_no_sign_change_gives_no_points(synthetic):
    loc = locate_d_bifurcation("landau_stuart", 4.0, [1e-2], [0.1, 0.2, 0.4])
    assert loc.points == []
    with pytest.raises(ValueError):
        locate_d_bifurcation("landau_stuart", 4.0, [1e-2], [0.1], axis="alpha")


def test_unresolved_midpoint_stops_bisection(monkeypatch):
    def noisy(model, alpha, d_ext, J, seed, settings, gamma=500.0, g=2.765):
        r = fake_point(model, alpha, d_ext, J, seed, settings)
        if abs(r["lambda_max"]) < 0.05:
            r["stderr"], r["sign"] = 1.0, 0
        return r

    monkeypatch.setattr(bf, "evaluate_point", noisy)
    loc = locate_d_bifurcation("landau_stuart", 5.25, [0.5], [0.2, 1.0, 5.0], rel_tol=1e-9)
    assert loc.points and all(p.resolution_limited for p in loc.points)


def test_alpha_min_brackets_onset(synthetic):
    r = find_alpha_min("landau_stuart", (4.0, 6.0), ls_probe(1.0, [0.9, 1.0, 1.1]), tol=0.01)
    assert r.bracket[0] < 5.0 + 0.0111 and r.bracket[1] > 5.0
    assert r.bracket[1] - r.bracket[0] <= 0.01
    assert r.alpha_min == pytest.approx(5.0, abs=0.01)
    with pytest.raises(ValueError):
        find_alpha_min("landau_stuart", (5.5, 6.0), ls_probe(1.0, [1.0]))


def test_alpha_min_bisects_around_unresolved_band(monkeypatch):
    def vague(model, alpha, d_ext, J, seed, settings, gamma=500.0, g=2.765):
        r = fake_point(model, alpha, d_ext, J, seed, settings)
        if 4.8 < alpha < 5.2:
            r["sign"] = 0
        return r

    monkeypatch.setattr(bf, "evaluate_point", vague)
    r = find_alpha_min("landau_stuart", (4.0, 6.0), ls_probe(1.0, [1.0]), tol=0.02, max_evals=60)
    assert r.resolution_limited
    assert 4.78 <= r.bracket[0] <= 4.8 and 5.2 <= r.bracket[1] <= 5.22


# -- power-law fitting -------------------------------------------------------

@given(st.floats(0.1, 10.0), st.floats(0.5, 2.0), st.integers(4, 12))
def test_fit_round_trip(C, slope, n):
    D = np.geomspace(1e-5, 1e-1, n)
    J = C * np.sqrt(2 * D) ** slope
    f = fit_power_law([(d, j, 1) for d, j in zip(D, J)])[1]
    assert f.slope == pytest.approx(slope, rel=1e-9)
    assert f.C_free == pytest.approx(C, rel=1e-8)
    assert max(abs(r) for r in f.residuals) < 1e-9


def test_fit_needs_four_points_per_branch():
    pts = [(d, d, 1) for d in (1e-3, 1e-2, 1e-1)] + [(d, d, 2) for d in (1e-4, 1e-3, 1e-2, 1e-1)]
    with pytest.raises(ValueError, match="branch 1"):
        fit_power_law(pts)
    assert set(fit_power_law(pts, branches=[2])) == {2}


def test_intensity_cap_filters_points():
    D = np.geomspace(1e-4, 1e-1, 6)
    pts = [(d, math.sqrt(2 * d), 1) for d in D]
    I = [math.sqrt(2 * d) * (1.5 if i < 2 else 1.01) for i, d in enumerate(D)]
    assert fit_power_law(pts, intensities=I)[1].n == 4
    assert fit_power_law(pts, intensities=I, intensity_cap=None)[1].n == 6
    with pytest.raises(ValueError):
        fit_power_law(pts, intensities=[3 * j for _, j, _ in pts])


def test_locus_point_validity():
    p = LocusPoint(6.0, 1e-3, 1.0, 1.1, -0.1, 0.1, 0.01, 0.01, 1.05, 1, False, 9)
    assert p.bracket_valid
    q = LocusPoint(6.0, 1e-3, 1.0, 1.1, -0.1, 0.1, 0.01, 0.2, 1.05, 1, False, 9)
    assert not q.bracket_valid
    loc = BifurcationLocus("laser", "d_ext", [p])
    assert loc.as_triples() == [(6.0, 1.05, 1e-3)]
    assert loc.rows()[0]["J"] == 1e-3


# -- grids, seeds, checkpoints -----------------------------------------------

def test_job_seed_depends_on_exact_coordinates():
    a = job_seed(0, "laser", 1.0, 0.1, 2.0)
    assert a == job_seed(0, "laser", 1.0, 0.1, 2.0)
    assert a != job_seed(0, "laser", 1.0, 0.1 + 1e-16, 2.0)
    assert a != job_seed(1, "laser", 1.0, 0.1, 2.0)
    assert a != job_seed(0, "landau_stuart", 1.0, 0.1, 2.0)
    assert 0 <= a < 2**63


def test_grid_validation():
    with pytest.raises(ValueError):
        SweepGrid("laser", (0.0,), (0.2, 0.1), (1.0,))
    with pytest.raises(ValueError):
        SweepGrid("laser", (0.0,), (0.0, 0.1), (1.0,))
    with pytest.raises(ValueError):
        SweepGrid("vdp", (0.0,), (0.1,), (1.0,))
    with pytest.raises(ValueError):
        LyapunovSettings(horizon=0.0)
    assert log_axis(1.0, 100.0, 3) == pytest.approx((1.0, 10.0, 100.0))
    assert log_axis(1.0, 2.0, 0) == ()


def test_settings_relative_units():
    s = LyapunovSettings(horizon=10.0, burn_in=2.0, relative=True)
    h, b, dt = s.resolved(LandauStuartParams(J=2.0))
    assert (h, b, dt) == pytest.approx((2.5, 0.5, 0.0025))
    h, b, dt = s.resolved(LaserParams(J=1.0))
    assert h == pytest.approx(10.0 / 1.8825) and dt == 1e-4


def test_grid_round_trip():
    g = SweepGrid("landau_stuart", (1.0, 2.0), (0.1,), (0.5, 1.0), LyapunovSettings(horizon=5.0), base_seed=3)
    assert SweepGrid.from_dict(json.loads(json.dumps(g.to_dict()))) == g
    assert g.digest() == SweepGrid.from_dict(g.to_dict()).digest()
    ids = [j["job_id"] for j in g.jobs()]
    assert ids == sorted(ids) and len(set(ids)) == 4


def test_empty_axis_gives_empty_table(tmp_path):
    res = sweep_lambda(SweepGrid("laser", (0.0,), (), (1.0,)))
    assert res.rows == [] and res.complete
    write_table_csv(res.rows, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().strip() == ",".join(bf.TABLE_COLUMNS)


GRID = SweepGrid("landau_stuart", (0.0, 8.0), (0.1, 0.5), (0.5, 1.0), QUICK, base_seed=7)


def test_interrupted_sweep_resumes_to_identical_table(tmp_path):
    full = sweep_lambda(GRID)
    ck = tmp_path / "ck.json"
    part = sweep_lambda(GRID, ck, max_jobs=3)
    assert not part.complete and part.n_computed == 3
    rest = resume_sweep(ck)
    assert rest.complete and rest.n_computed == 5
    write_table_csv(full.rows, tmp_path / "a.csv")
    write_table_csv(rest.rows, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    again = resume_sweep(ck)
    assert again.n_computed == 0
    assert np.array_equal(full.lambda_array(), rest.lambda_array())
    assert full.sign_array().shape == (2, 2, 2)


def test_parallel_sweep_matches_serial():
    a = sweep_lambda(GRID, workers=1)
    b = sweep_lambda(GRID, workers=2)
    assert a.rows == b.rows


def test_tampered_checkpoint_is_rejected(tmp_path):
    ck = tmp_path / "ck.json"
    sweep_lambda(GRID, ck, max_jobs=2)
    obj = json.loads(ck.read_text())
    first = sorted(obj["jobs"])[0]
    obj["jobs"][first]["lambda_max"] += 1.0
    ck.write_text(json.dumps(obj))
    with pytest.raises(CheckpointMismatch):
        load_checkpoint(ck)
    with pytest.raises(CheckpointMismatch):
        resume_sweep(ck)


def test_checkpoint_for_other_grid_is_rejected(tmp_path):
    ck = tmp_path / "ck.json"
    sweep_lambda(GRID, ck, max_jobs=1)
    other = SweepGrid("landau_stuart", (0.0, 8.0), (0.1, 0.5), (0.5, 1.0), QUICK, base_seed=8)
    with pytest.raises(CheckpointMismatch):
        sweep_lambda(other, ck)
    ck.write_text("{not json")
    with pytest.raises(CheckpointMismatch):
        load_checkpoint(ck)


# -- sign-pattern helpers ----------------------------------------------------

@pytest.mark.parametrize(
    "signs, runs, flanked",
    [
        ([-1, 1, 1, -1], 1, True),
        ([-1, 1, 0, 1, -1], 1, True),
        ([-1, 1, -1, 1, -1], 2, False),
        ([1, 1, -1], 1, False),
        ([-1, -1], 0, False),
        ([-1, 0, 1], 1, False),
    ],
)
def test_sign_patterns(signs, runs, flanked):
    assert positive_intervals(signs) == runs
    assert contiguous_positive_between_negatives(signs) is flanked
