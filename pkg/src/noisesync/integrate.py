"""Deterministic and stochastic time stepping.

Noise enters additively: the external forcing only in the E equation, the
intrinsic N noise only in the N equation.  Time is tracked as an integer
step count so that a trajectory started at t0 reads exactly the same noise
cells as one started earlier.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels as K
from .models import BlowUpError, LandauStuartParams, LaserParams, Params, State
from .noise import NoisePath

SCHEMES = {"rk4_deterministic": K.RK4, "euler_maruyama": K.EULER, "stochastic_heun": K.HEUN}

CHUNK = 1 << 15

DEFAULT_DT_LASER = 1e-4
DEFAULT_DT_LS = 1e-2


def default_dt(p: Params) -> float:
    return DEFAULT_DT_LASER if isinstance(p, LaserParams) else DEFAULT_DT_LS


@dataclasses.dataclass(frozen=True)
class IntegratorConfig:
    dt: float = DEFAULT_DT_LASER
    scheme: str = "stochastic_heun"
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def stochastic(self) -> bool:
        return self.scheme != "rk4_deterministic"


@dataclasses.dataclass(frozen=True)
class Monochromatic:
    """Deterministic injection K exp(i nu t) added to dE/dt."""

    K: float
    nu: float = 0.0

    def packed(self) -> np.ndarray:
        return np.array([1.0, self.K, self.nu])


NO_FORCING = np.zeros(3)


def _model_code(p: Params) -> int:
    return K.LASER if isinstance(p, LaserParams) else K.LANDAU_STUART


def _forcing(forcing) -> np.ndarray:
    return NO_FORCING if forcing is None else forcing.packed()


def refinement_level(path: NoisePath | None, dt: float) -> int:
    """log2(dt_grid / dt); the step must equal or halve-subdivide the noise grid."""
    if path is None:
        return 0
    ratio = path.spec.dt_grid / dt
    level = round(math.log2(ratio)) if ratio >= 1 else -1
    if level < 0 or abs(ratio - 2**level) > 1e-9 * ratio:
        raise ValueError(f"dt={dt} must equal dt_grid={path.spec.dt_grid} divided by a power of two")
    return level


def step_index(t: float, dt: float, origin: float = 0.0) -> int:
    x = (t - origin) / dt
    n = round(x)
    if abs(x - n) > 1e-6:
        raise ValueError(f"t={t} is not a multiple of dt={dt}")
    return int(n)


def _check_path(config: IntegratorConfig, path):
    if config.stochastic and path is None:
        raise ValueError(f"scheme {config.scheme} requires a NoisePath")


def noise_chunk(path: NoisePath | None, n0: int, count: int, level: int, m_intrinsic: int = 0):
    """External (count, 2) and intrinsic (count, m, 3) increments for steps n0..n0+count."""
    if path is None:
        return np.zeros((count, 2)), np.zeros((0, 1, 3))
    ext = path.ext_block(n0, count, level)
    if m_intrinsic and (path.spec.d_e > 0 or path.spec.d_n > 0):
        intr = path.intrinsic_block(n0, count, m_intrinsic, level)
    else:
        intr = np.zeros((0, 1, 3))
    return ext, intr


def step(p: Params, state: State, config: IntegratorConfig, path: NoisePath | None = None, forcing=None) -> State:
    """Advance one step of ``config.dt``."""
    _check_path(config, path)
    level = refinement_level(path, config.dt) if config.stochastic else 0
    origin = path.origin_time if path is not None else 0.0
    n0 = step_index(state.t, config.dt, origin)
    X = state.as_array()[None, :].copy()
    if isinstance(p, LandauStuartParams):
        X[0, 2] = 0.0
    ext, intr = noise_chunk(path if config.stochastic else None, n0, 1, level, 1)
    if not np.all(np.isfinite(X)):
        raise BlowUpError("non-finite state", state.t)
    status, fail = K.advance(
        _model_code(p), p.packed(), _forcing(forcing), SCHEMES[config.scheme], X, n0, config.dt,
        ext, intr, 1, np.zeros((0, 1, 3)),
    )
    t1 = origin + (n0 + 1) * config.dt
    if status[0]:
        raise BlowUpError("trajectory blew up", t1)
    return State.from_array(X[0], t1)


def step_with_tangent(
    p: Params, state: State, tangent, config: IntegratorConfig, path: NoisePath | None = None, forcing=None
):
    """Advance state and a tangent vector one step; returns (State, tangent)."""
    _check_path(config, path)
    v = np.zeros(3)
    tv = np.asarray(tangent, dtype=float)
    v[: tv.size] = tv
    nv = float(np.linalg.norm(v))
    if not nv > 0:
        raise ValueError("tangent must be nonzero")
    level = refinement_level(path, config.dt) if config.stochastic else 0
    origin = path.origin_time if path is not None else 0.0
    n0 = step_index(state.t, config.dt, origin)
    x = state.as_array()
    ext, _ = noise_chunk(path if config.stochastic else None, n0, 1, level)
    acc = np.zeros(3)
    # renorm_every larger than the step count: the kernel still renormalises
    # at the last step, so undo that scaling afterwards.
    st, _ = K.tangent_chunk(
        _model_code(p), p.packed(), _forcing(forcing), SCHEMES[config.scheme], x, v, n0, config.dt,
        ext, 2, acc, np.full(1, -1, dtype=np.int64), np.zeros(1),
    )
    t1 = origin + (n0 + 1) * config.dt
    if st:
        raise BlowUpError("trajectory blew up", t1)
    v *= math.exp(acc[0])
    return State.from_array(x, t1), v[: tv.size]


@dataclasses.dataclass
class Trace:
    t: np.ndarray
    x: np.ndarray  # (n, 3)
    model: str = "laser"

    def __len__(self):
        return len(self.t)

    @property
    def E(self) -> np.ndarray:
        return self.x[:, 0] + 1j * self.x[:, 1]

    @property
    def intensity(self) -> np.ndarray:
        return self.x[:, 0] ** 2 + self.x[:, 1] ** 2

    @property
    def arg_unwrapped(self) -> np.ndarray:
        return np.unwrap(np.arctan2(self.x[:, 1], self.x[:, 0]))

    def state(self, i: int = -1) -> State:
        return State.from_array(self.x[i], self.t[i])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "e_re", "e_im", "n", "abs_e2", "arg_e"])
            for row in zip(self.t, self.x[:, 0], self.x[:, 1], self.x[:, 2], self.intensity, self.arg_unwrapped):
                w.writerow([repr(float(v)) for v in row])

    def save_npz(self, path) -> None:
        np.savez_compressed(path, t=self.t, x=self.x, model=self.model)

    @classmethod
    def load_npz(cls, path) -> "Trace":
        with np.load(path) as f:
            return cls(f["t"], f["x"], str(f["model"]))


Observer = Callable[[float, np.ndarray], None]


def run(
    p: Params,
    initial: State,
    t0: float,
    t1: float,
    config: IntegratorConfig,
    path: NoisePath | None = None,
    observers: Sequence[Observer] = (),
    forcing=None,
) -> Trace:
    """Integrate from t0 to t1 and return the decimated trace.

    Observers are called as ``obs(t, x)`` for every recorded sample.
    """
    _check_path(config, path)
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    level = refinement_level(path, config.dt) if config.stochastic else 0
    origin = path.origin_time if path is not None else 0.0
    n0 = step_index(t0, config.dt, origin)
    nsteps = step_index(t1 - t0, config.dt)
    X = initial.as_array()[None, :].copy()
    if isinstance(p, LandauStuartParams):
        X[0, 2] = 0.0
    if not np.all(np.isfinite(X)):
        raise BlowUpError("non-finite initial state", t0)
    stride = config.record_stride
    ts = [t0]
    xs = [X[0].copy()]
    for obs in observers:
        obs(t0, X[0].copy())
    code = _model_code(p)
    pk = p.packed()
    fp = _forcing(forcing)
    scheme = SCHEMES[config.scheme]
    n = 0
    # chunks are multiples of the stride so the recording phase is preserved
    chunk = max(stride, (CHUNK // stride) * stride)
    while n < nsteps:
        c = min(chunk, nsteps - n)
        ext, intr = noise_chunk(path if config.stochastic else None, n0 + n, c, level, 1)
        out = np.empty((c // stride, 1, 3))
        status, fail = K.advance(code, pk, fp, scheme, X, n0 + n, config.dt, ext, intr, stride, out)
        if status[0]:
            raise BlowUpError("trajectory blew up", origin + fail[0] * config.dt)
        for j in range(out.shape[0]):
            tj = origin + (n0 + n + (j + 1) * stride) * config.dt
            ts.append(tj)
            xs.append(out[j, 0].copy())
            for obs in observers:
                obs(tj, out[j, 0])
        n += c
    return Trace(np.array(ts), np.array(xs), p.kind)


def propagate_set(
    p: Params,
    X: np.ndarray,
    t0: float,
    t1: float,
    config: IntegratorConfig,
    path: NoisePath | None = None,
    forcing=None,
    intrinsic: bool = False,
):
    """Advance many states (rows of ``X``) under one shared realisation.

    Returns ``(X_final, ok_mask)``; rows that blew up are left at their
    failing value and marked False.
    """
    _check_path(config, path)
    level = refinement_level(path, config.dt) if config.stochastic else 0
    origin = path.origin_time if path is not None else 0.0
    n0 = step_index(t0, config.dt, origin)
    nsteps = step_index(t1 - t0, config.dt)
    X = np.array(X, dtype=float, copy=True)
    if X.ndim != 2 or X.shape[1] not in (2, 3):
        raise ValueError("X must have shape (P, 2) or (P, 3)")
    if X.shape[1] == 2:
        X = np.column_stack([X, np.zeros(len(X))])
    if isinstance(p, LandauStuartParams):
        X[:, 2] = 0.0
    ok = np.all(np.isfinite(X), axis=1)
    code = _model_code(p)
    pk = p.packed()
    fp = _forcing(forcing)
    scheme = SCHEMES[config.scheme]
    m = len(X) if intrinsic else 0
    n = 0
    while n < nsteps:
        c = min(CHUNK, nsteps - n)
        ext, intr = noise_chunk(path if config.stochastic else None, n0 + n, c, level, m)
        live = np.flatnonzero(ok)
        if live.size == 0:
            break
        sub = X[live]
        if intr.shape[0]:
            intr = np.ascontiguousarray(intr[:, live, :])
        status, _ = K.advance(code, pk, fp, scheme, sub, n0 + n, config.dt, ext, intr, 1, np.zeros((0, 1, 3)))
        X[live] = sub
        ok[live[status != 0]] = False
        n += c
    return X, ok


def states_to_array(states: Iterable[State]) -> np.ndarray:
    return np.array([s.as_array() for s in states])
