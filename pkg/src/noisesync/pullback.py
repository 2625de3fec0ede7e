"""Pullback-convergence snapshots under one fixed forcing realisation."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import pdist

from .integrate import IntegratorConfig, default_dt, propagate_set
from .lyapunov import LyapunovEstimate
from .models import Params
from .noise import NoisePath, NoiseSpec

RANDOM_SINK = "random_sink"
RANDOM_STRANGE_ATTRACTOR = "random_strange_attractor"
INCONCLUSIVE = "inconclusive"


@dataclasses.dataclass(frozen=True)
class PullbackConfig:
    t_snapshot: float = 30.0
    t0_list: tuple = (29.0, 28.0, 0.0)
    n_points: int = 2500
    ic_half_width: float | None = None  # default 2 sqrt(J)
    n_init: float = 0.0
    dt: float | None = None
    cluster_radius: float | None = None  # default 1e-3 sqrt(J)

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if any(t0 >= self.t_snapshot for t0 in self.t0_list):
            raise ValueError("every t0 must be earlier than t_snapshot")


@dataclasses.dataclass
class SnapshotSummary:
    t0: float
    points: np.ndarray  # (n, 3) final states
    diameter: float
    radial_spread: float
    cluster_count: int
    cluster_radius: float
    n_failed: int


def grid_initial_conditions(n_points: int, half_width: float, n_init: float = 0.0) -> np.ndarray:
    """Cell-centred square grid over [-w, w]^2 in the E-plane with N fixed.

    The grid has ceil(sqrt(n))^2 >= n points; the first n are used.
    """
    side = math.ceil(math.sqrt(n_points))
    c = (np.arange(side) + 0.5) / side * 2 * half_width - half_width
    xx, yy = np.meshgrid(c, c, indexing="ij")
    X = np.column_stack([xx.ravel(), yy.ravel(), np.full(side * side, n_init)])
    return X[:n_points]


def e_plane_diameter(points: np.ndarray) -> float:
    """Largest pairwise distance between points in the (Re E, Im E) plane."""
    P = np.asarray(points)[:, :2]
    if len(P) < 2:
        return 0.0
    try:
        hull = P[ConvexHull(P).vertices]
    except (QhullError, ValueError):
        # collinear or degenerate sets
        hull = P
    return float(pdist(hull).max()) if len(hull) > 1 else 0.0


def cluster_count(points: np.ndarray, radius: float) -> int:
    """Number of single-linkage clusters at the given linkage radius."""
    P = np.asarray(points)[:, :2]
    tree = cKDTree(P)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    n = len(P)
    A = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return int(connected_components(A, directed=False)[0])


def pullback_snapshot(p: Params, noise_spec: NoiseSpec, cfg: PullbackConfig) -> list[SnapshotSummary]:
    """Release the same grid of initial states at each t0 and photograph them at t_snapshot."""
    J = abs(p.J) if p.J != 0 else 1.0
    w = cfg.ic_half_width if cfg.ic_half_width is not None else 2.0 * math.sqrt(J)
    radius = cfg.cluster_radius if cfg.cluster_radius is not None else 1e-3 * math.sqrt(J)
    dt = cfg.dt if cfg.dt is not None else min(default_dt(p), noise_spec.dt_grid)
    scheme = "stochastic_heun" if noise_spec.d_ext > 0 else "rk4_deterministic"
    config = IntegratorConfig(dt=dt, scheme=scheme)
    path = NoisePath(noise_spec)
    X0 = grid_initial_conditions(cfg.n_points, w, cfg.n_init)
    out = []
    for t0 in cfg.t0_list:
        X, ok = propagate_set(p, X0, t0, cfg.t_snapshot, config, path if config.stochastic else None)
        pts = X[ok]
        r = np.hypot(pts[:, 0], pts[:, 1])
        out.append(
            SnapshotSummary(
                t0=float(t0),
                points=pts,
                diameter=e_plane_diameter(pts),
                radial_spread=float(r.max() - r.min()) if len(r) else 0.0,
                cluster_count=cluster_count(pts, radius) if len(pts) else 0,
                cluster_radius=radius,
                n_failed=int((~ok).sum()),
            )
        )
    return out


def classify_attractor(summaries, lambda_est: LyapunovEstimate, k: float = 2.0) -> str:
    """Random sink / random strange attractor from the sign of lambda_max.

    The snapshot trend is a consistency check: a sink must contract as t0
    moves into the past, a strange attractor must not collapse.
    """
    sign = lambda_est.sign(k)
    if sign == 0:
        return INCONCLUSIVE
    if not summaries:
        return RANDOM_SINK if sign < 0 else RANDOM_STRANGE_ATTRACTOR
    ordered = sorted(summaries, key=lambda s: -s.t0)  # latest release first
    first, last = ordered[0].diameter, ordered[-1].diameter
    scale = max(first, 1e-300)
    collapsed = last < 0.1 * scale or ordered[-1].cluster_count == 1
    if sign < 0:
        return RANDOM_SINK if collapsed else INCONCLUSIVE
    return RANDOM_STRANGE_ATTRACTOR if not collapsed else INCONCLUSIVE


def summary_dict(s: SnapshotSummary) -> dict:
    return {
        "t0": s.t0,
        "diameter": s.diameter,
        "radial_spread": s.radial_spread,
        "cluster_count": s.cluster_count,
        "cluster_radius": s.cluster_radius,
        "n_points": int(len(s.points)),
        "n_failed": s.n_failed,
    }
