"""Radial kicks interleaved with the deterministic flow.

A kick rescales |E| by an angle-dependent factor and leaves arg(E) and N
alone.  With shear (alpha != 0) the flow then moves kicked points to
different isochrones, which is what folds the image of the cycle.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from .integrate import IntegratorConfig, propagate_set
from .models import LandauStuartParams, LaserParams, Params, State, floquet_closed_form

R_FLOOR = 1e-9


@dataclasses.dataclass(frozen=True)
class KickSchedule:
    times: tuple = (0.0, 0.25, 0.5, 0.75)
    amplitude: float = 0.8
    angular_wavenumber: int = 4
    mode: str = "multiplicative"  # multiplicative | additive
    # extra arg(E) offsets sum_i a_i sin(k_i theta + phi_i), given as (k, a, phi)
    angular_terms: tuple = ()

    def __post_init__(self):
        t = list(self.times)
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("kick times must be strictly increasing")
        if not math.isfinite(self.amplitude):
            raise ValueError("kick amplitude must be finite")
        if self.mode not in ("multiplicative", "additive"):
            raise ValueError(f"unknown kick mode {self.mode!r}")


def kick_array(X: np.ndarray, schedule: KickSchedule):
    """Kick every row of X (columns Re E, Im E, N); returns (X_new, n_clamped)."""
    X = np.array(X, dtype=float, copy=True)
    r = np.hypot(X[:, 0], X[:, 1])
    if np.any(r == 0):
        raise ValueError("kick undefined at E = 0")
    th = np.arctan2(X[:, 1], X[:, 0])
    s = schedule.amplitude * np.sin(schedule.angular_wavenumber * th)
    r_new = r * (1.0 + s) if schedule.mode == "multiplicative" else r + s
    clamped = r_new <= 0
    r_new = np.where(clamped, R_FLOOR, r_new)
    if schedule.angular_terms:
        th_new = th.copy()
        for k, a, phi in schedule.angular_terms:
            th_new += a * np.sin(k * th + phi)
        X[:, 0] = r_new * np.cos(th_new)
        X[:, 1] = r_new * np.sin(th_new)
    else:
        # rescale the components directly so arg(E) is untouched bit for bit
        f = r_new / r
        X[:, 0] *= f
        X[:, 1] *= f
    return X, int(clamped.sum())


def apply_kick(state: State, schedule: KickSchedule) -> State:
    X, n = kick_array(state.as_array()[None, :], schedule)
    if n:
        warnings.warn(f"kick drove |E| to <= 0; clamped to {R_FLOOR}", RuntimeWarning, stacklevel=2)
    return State.from_array(X[0], state.t)


def circle_set(J: float, n: int) -> np.ndarray:
    """``n`` points equally spaced on the cycle |E| = sqrt(J), N = 0, ordered by angle."""
    th = 2 * np.pi * np.arange(n) / n
    r = math.sqrt(J)
    return np.column_stack([r * np.cos(th), r * np.sin(th), np.zeros(n)])


def evolve_kicked_set(
    p: Params,
    initial_set: np.ndarray,
    schedule: KickSchedule,
    t_end: float,
    snapshot_times,
    dt: float = 1e-4,
) -> dict:
    """Flow a set of states, kicking at the scheduled instants.

    A snapshot requested at a kick instant shows the set just after the kick.
    Returns ``{t: (P, 3) array}`` plus the key ``'clamped'`` with the number
    of clamped kicks.
    """
    if isinstance(p, LaserParams) and p.Delta != 0:
        raise ValueError("kick experiments assume Delta = 0")
    if isinstance(p, LandauStuartParams) and p.DeltaTilde != 0:
        raise ValueError("kick experiments assume DeltaTilde = 0")
    cfg = IntegratorConfig(dt=dt, scheme="rk4_deterministic")
    events = sorted({float(t) for t in schedule.times if t <= t_end} | {float(t) for t in snapshot_times})
    kick_times = {float(t) for t in schedule.times}
    X = np.array(initial_set, dtype=float, copy=True)
    if X.shape[1] == 2:
        X = np.column_stack([X, np.zeros(len(X))])
    t = 0.0
    out = {}
    clamped = 0
    for ev in events:
        if ev < t:
            continue
        if ev > t:
            X, ok = propagate_set(p, X, t, ev, cfg)
            if not ok.all():
                warnings.warn(f"{(~ok).sum()} members blew up before t={ev}", RuntimeWarning, stacklevel=2)
            t = ev
        if ev in kick_times:
            X, n = kick_array(X, schedule)
            clamped += n
        if ev in snapshot_times or any(abs(ev - s) < 1e-12 for s in snapshot_times):
            out[ev] = X.copy()
    if t < t_end:
        X, _ = propagate_set(p, X, t, t_end, cfg)
    out["clamped"] = clamped
    return out


def count_folds(points: np.ndarray) -> int:
    """Sign changes of the angular increment along the ordered closed image curve.

    Zero folds means arg(E) is monotone along the curve.
    """
    P = np.asarray(points)
    th = np.unwrap(np.arctan2(P[:, 1], P[:, 0]))
    d = np.diff(np.append(th, th[0] + 2 * np.pi * winding_number(P)))
    s = np.sign(d[d != 0])
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s != np.roll(s, 1)))


def winding_number(points: np.ndarray) -> int:
    """Winding number of the closed polygon through ``points`` about the origin."""
    P = np.asarray(points)
    th = np.arctan2(P[:, 1], P[:, 0])
    d = np.diff(np.append(th, th[0]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return int(round(d.sum() / (2 * np.pi)))


def phase_difference_experiment(
    cases=(("laser", 0.0), ("laser", 3.0), ("landau_stuart", 3.0)),
    J: float = 1.0,
    ic_pair=((1.0, 0.0), (0.5, 0.0)),
    t_end: float | None = None,
    dt: float = 1e-4,
    n_samples: int = 2000,
    time_map: str = "rescaled",
):
    """arg(E1) - arg(E2) versus laser time for two trajectories on different isochrones.

    ``ic_pair`` gives (|E| / sqrt(J), arg E) of the two starting points, both
    with N = 0.  Landau-Stuart curves are put on the laser time axis by
    t = t~ / (g gamma) (``time_map='rescaled'``) or t = t~ (``'identity'``).
    Returns ``{label: (t, diff, dpsi0)}``.
    """
    out = {}
    for kind, alpha in cases:
        lp = LaserParams(J=J, alpha=alpha)
        if t_end is None:
            te = 20.0 / abs(floquet_closed_form(lp).mu2.real)
        else:
            te = t_end
        if kind == "laser":
            p: Params = lp
            scale = 1.0
            step = dt
        else:
            p = LandauStuartParams(J=J, alpha=alpha)
            scale = lp.g_gamma if time_map == "rescaled" else 1.0
            step = 1e-2 if time_map == "rescaled" else dt
        T = te * scale
        nsteps = int(round(T / step))
        stride = max(1, nsteps // n_samples)
        X = np.array(
            [[math.sqrt(J) * r * math.cos(a), math.sqrt(J) * r * math.sin(a), 0.0] for r, a in ic_pair]
        )
        psi0 = [math.atan2(x[1], x[0]) + alpha * math.log(math.hypot(x[0], x[1])) for x in X]
        ts = [0.0]
        th1 = [math.atan2(X[0, 1], X[0, 0])]
        th2 = [math.atan2(X[1, 1], X[1, 0])]
        cfg = IntegratorConfig(dt=step, scheme="rk4_deterministic")
        done = 0
        while done < nsteps:
            c = min(stride, nsteps - done)
            X, _ = propagate_set(p, X, done * step, (done + c) * step, cfg)
            done += c
            ts.append(done * step / scale)
            th1.append(math.atan2(X[0, 1], X[0, 0]))
            th2.append(math.atan2(X[1, 1], X[1, 0]))
        diff = np.unwrap(np.array(th1)) - np.unwrap(np.array(th2))
        out[f"{kind}_alpha{alpha:g}"] = (np.array(ts), diff, psi0[0] - psi0[1])
    return out
