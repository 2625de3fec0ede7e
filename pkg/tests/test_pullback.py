import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.distance import pdist

from noisesync.lyapunov import LyapunovEstimate
from noisesync.models import LandauStuartParams, LaserParams
from noisesync.noise import NoiseSpec
from noisesync.pullback import (
    INCONCLUSIVE,
    RANDOM_SINK,
    RANDOM_STRANGE_ATTRACTOR,
    PullbackConfig,
    SnapshotSummary,
    classify_attractor,
    cluster_count,
    e_plane_diameter,
    grid_initial_conditions,
    pullback_snapshot,
)

coords = arrays(np.float64, st.tuples(st.integers(2, 40), st.just(3)), elements=st.floats(-10, 10))


@given(coords)
def test_diameter_matches_brute_force(P):
    assert e_plane_diameter(P) == pytest.approx(pdist(P[:, :2]).max(), abs=1e-12)


def test_diameter_degenerate_sets():
    assert e_plane_diameter(np.zeros((1, 3))) == 0.0
    line = np.column_stack([np.linspace(0, 3, 5), np.zeros(5), np.zeros(5)])
    assert e_plane_diameter(line) == pytest.approx(3.0)


def test_cluster_count():
    P = np.array([[0, 0, 0], [0.5e-3, 0, 0], [1, 1, 0], [1, 1 + 0.5e-3, 0], [5, 5, 0.0]])
    assert cluster_count(P, 1e-3) == 3
    assert cluster_count(P, 10.0) == 1
    # chains link transitively
    chain = np.column_stack([np.arange(10) * 0.9e-3, np.zeros(10), np.zeros(10)])
    assert cluster_count(chain, 1e-3) == 1


def test_grid_covers_square():
    X = grid_initial_conditions(100, 2.0, n_init=0.1)
    assert X.shape == (100, 3)
    assert np.all(np.abs(X[:, :2]) < 2.0) and np.all(X[:, 2] == 0.1)
    assert len(np.unique(X[:, :2], axis=0)) == 100
    assert grid_initial_conditions(7, 1.0).shape == (7, 3)


def summaries(diams, clusters):
    return [SnapshotSummary(t0, np.zeros((2, 3)), d, 0.0, c, 1e-3, 0)
            for t0, d, c in zip((29.0, 28.0, 0.0), diams, clusters)]


def est(lam, se):
    return LyapunovEstimate(lam, se, 1.0, 1, (0,))


def test_classification_logic():
    collapse = summaries([1.0, 0.5, 1e-6], [100, 50, 1])
    spread = summaries([1.0, 1.1, 0.9], [100, 100, 90])
    assert classify_attractor(collapse, est(-1.0, 0.1)) == RANDOM_SINK
    assert classify_attractor(spread, est(0.5, 0.1)) == RANDOM_STRANGE_ATTRACTOR
    assert classify_attractor(spread, est(0.05, 0.1)) == INCONCLUSIVE
    assert classify_attractor(spread, est(-1.0, 0.1)) == INCONCLUSIVE
    assert classify_attractor(collapse, est(1.0, 0.1)) == INCONCLUSIVE
    assert classify_attractor([], est(-1.0, 0.1)) == RANDOM_SINK


def test_config_validation():
    with pytest.raises(ValueError):
        PullbackConfig(t_snapshot=1.0, t0_list=(1.0,))
    with pytest.raises(ValueError):
        PullbackConfig(n_points=1)


def test_unforced_ls_snapshot_collapses_radially():
    p = LandauStuartParams(J=1.0, alpha=0.0)
    cfg = PullbackConfig(t_snapshot=20.0, t0_list=(0.0,), n_points=64, dt=0.01)
    (s,) = pullback_snapshot(p, NoiseSpec(dt_grid=0.01), cfg)
    r = np.hypot(s.points[:, 0], s.points[:, 1])
    assert np.allclose(r, 1.0, atol=1e-6)
    assert s.n_failed == 0


def test_snapshots_share_the_realisation():
    # releasing at t0 then stopping early equals the start of a longer run
    p = LaserParams(J=1.0, alpha=0.0)
    spec = NoiseSpec(d_ext=0.5, seed=2)
    a = pullback_snapshot(p, spec, PullbackConfig(t_snapshot=0.6, t0_list=(0.4, 0.0), n_points=16))
    b = pullback_snapshot(p, spec, PullbackConfig(t_snapshot=0.6, t0_list=(0.4, 0.0), n_points=16))
    assert np.array_equal(a[0].points, b[0].points)
    assert a[1].radial_spread < a[0].radial_spread
    assert math.isfinite(a[1].radial_spread)
