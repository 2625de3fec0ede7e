"""Class-B laser and Landau-Stuart vector fields.

Complex field E is stored as two reals everywhere.  The laser state is
``(Re E, Im E, N)``; the Landau-Stuart state is ``(Re E, Im E)`` and runs in
the rescaled time ``t~ = g*gamma*t``.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from typing import Union

import numpy as np

GAMMA = 500.0
G = 2.765


class BlowUpError(FloatingPointError):
    """Raised when a state becomes non-finite or leaves the physical regime."""

    def __init__(self, msg: str, t: float | None = None):
        super().__init__(msg if t is None else f"{msg} (t={t:g})")
        self.t = t


@dataclasses.dataclass(frozen=True)
class LaserParams:
    J: float
    Delta: float = 0.0
    alpha: float = 0.0
    gamma: float = GAMMA
    g: float = G

    kind = "laser"
    dim = 3

    def __post_init__(self):
        if not self.gamma > 0 or not self.g > 0:
            raise ValueError("gamma and g must be positive")
        for name in ("J", "Delta", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def g_gamma(self) -> float:
        return self.g * self.gamma

    def packed(self) -> np.ndarray:
        return np.array([self.J, self.Delta, self.alpha, self.gamma, self.g], dtype=float)

    def replace(self, **kw) -> "LaserParams":
        return dataclasses.replace(self, **kw)


@dataclasses.dataclass(frozen=True)
class LandauStuartParams:
    J: float
    DeltaTilde: float = 0.0
    alpha: float = 0.0

    kind = "landau_stuart"
    dim = 2

    def __post_init__(self):
        for name in ("J", "DeltaTilde", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def Delta(self) -> float:
        # phase velocity of Psi in the model's own time
        return self.DeltaTilde

    def packed(self) -> np.ndarray:
        return np.array([self.J, self.DeltaTilde, self.alpha, 0.0, 0.0], dtype=float)

    def replace(self, **kw) -> "LandauStuartParams":
        return dataclasses.replace(self, **kw)


Params = Union[LaserParams, LandauStuartParams]


@dataclasses.dataclass
class State:
    e_re: float
    e_im: float
    n: float = 0.0
    t: float = 0.0

    @property
    def E(self) -> complex:
        return complex(self.e_re, self.e_im)

    def as_array(self) -> np.ndarray:
        return np.array([self.e_re, self.e_im, self.n], dtype=float)

    @classmethod
    def from_array(cls, x, t: float = 0.0) -> "State":
        return cls(float(x[0]), float(x[1]), float(x[2]) if len(x) > 2 else 0.0, float(t))

    @classmethod
    def from_complex(cls, E: complex, n: float = 0.0, t: float = 0.0) -> "State":
        return cls(E.real, E.imag, n, t)


@dataclasses.dataclass(frozen=True)
class FloquetSet:
    mu1: float
    mu2: complex
    mu3: complex | None
    regime: str  # overdamped | underdamped | landau_stuart

    def real_parts(self) -> list[float]:
        out = [self.mu1, self.mu2.real]
        if self.mu3 is not None:
            out.append(self.mu3.real)
        return out


def _check_finite(state: State):
    if not (math.isfinite(state.e_re) and math.isfinite(state.e_im) and math.isfinite(state.n)):
        raise BlowUpError("non-finite state", state.t)


def laser_drift(state: State, p: LaserParams) -> np.ndarray:
    """(Re dE/dt, Im dE/dt, dN/dt) of the free-running laser."""
    _check_finite(state)
    E = state.E
    N = state.n
    dE = 1j * p.Delta * E + p.g_gamma * (1 - 1j * p.alpha) * N * E
    dN = p.J - N - (1 + p.g * N) * abs(E) ** 2
    return np.array([dE.real, dE.imag, dN])


def ls_drift(state: State, p: LandauStuartParams) -> np.ndarray:
    """(Re dE/dt~, Im dE/dt~) of the Landau-Stuart model."""
    _check_finite(state)
    E = state.E
    e2 = abs(E) ** 2
    dE = (p.J + 1j * (p.DeltaTilde - p.alpha * (p.J - e2))) * E - E * e2
    return np.array([dE.real, dE.imag])


def drift(state: State, p: Params) -> np.ndarray:
    if isinstance(p, LaserParams):
        return laser_drift(state, p)
    return ls_drift(state, p)


def laser_jacobian(state: State, p: LaserParams) -> np.ndarray:
    x, y, N = state.e_re, state.e_im, state.n
    gg = p.g_gamma
    a = p.alpha
    c = -2.0 * (1.0 + p.g * N)
    return np.array(
        [
            [gg * N, -p.Delta + gg * a * N, gg * (x + a * y)],
            [p.Delta - gg * a * N, gg * N, gg * (y - a * x)],
            [c * x, c * y, -1.0 - p.g * (x * x + y * y)],
        ]
    )


def ls_jacobian(state: State, p: LandauStuartParams) -> np.ndarray:
    x, y = state.e_re, state.e_im
    e2 = x * x + y * y
    A = p.J - e2
    w = p.DeltaTilde - p.alpha * (p.J - e2)
    a = p.alpha
    return np.array(
        [
            [A - 2 * x * x - 2 * a * x * y, -2 * x * y - w - 2 * a * y * y],
            [-2 * x * y + w + 2 * a * x * x, A - 2 * y * y + 2 * a * x * y],
        ]
    )


def jacobian(state: State, p: Params) -> np.ndarray:
    if isinstance(p, LaserParams):
        return laser_jacobian(state, p)
    return ls_jacobian(state, p)


def regime_boundaries(gamma: float = GAMMA, g: float = G) -> tuple[float, float]:
    """Pump values separating overdamped and underdamped relaxation."""
    r = math.sqrt(1.0 - 1.0 / (2.0 * gamma))
    return (4 * gamma * (1 - r) - 1) / g, (4 * gamma * (1 + r) - 1) / g


def floquet_closed_form(p: Params) -> FloquetSet:
    """Floquet exponents of the on-state limit cycle."""
    if not p.J > 0:
        raise ValueError(f"no limit cycle for J={p.J} <= 0")
    if isinstance(p, LandauStuartParams):
        return FloquetSet(0.0, complex(-2.0 * p.J), None, "landau_stuart")
    a = 0.5 * (1 + p.g * p.J)
    disc = a * a - 2 * p.g * p.gamma * p.J
    b = math.sqrt(abs(disc))
    lo, hi = regime_boundaries(p.gamma, p.g)
    if lo < p.J < hi:
        return FloquetSet(0.0, complex(-a, b), complex(-a, -b), "underdamped")
    return FloquetSet(0.0, complex(-a + b), complex(-a - b), "overdamped")


def relaxation_rate(p: Params) -> float:
    """|Re mu2|, the slowest normal decay rate towards the cycle."""
    return abs(floquet_closed_form(p).mu2.real)


def phase_psi(state: State, alpha: float, wrap: bool = False) -> float:
    """Isochrone phase arg(E) + alpha ln|E|."""
    E = state.E
    if E == 0:
        raise ValueError("phase undefined at E = 0")
    psi = cmath.phase(E) + alpha * math.log(abs(E))
    if wrap:
        psi = psi % (2 * math.pi)
    return psi


def unwrapped_psi(e_re, e_im, alpha: float) -> np.ndarray:
    """Psi along a sampled trajectory with arg(E) unwrapped."""
    e_re = np.asarray(e_re, dtype=float)
    e_im = np.asarray(e_im, dtype=float)
    r = np.hypot(e_re, e_im)
    if np.any(r == 0):
        raise ValueError("phase undefined at E = 0")
    return np.unwrap(np.arctan2(e_im, e_re)) + alpha * np.log(r)


def isochrone_points(C: float, alpha: float, radius_range: tuple[float, float], n: int = 200) -> np.ndarray:
    """Sample the logarithmic spiral arg(E) + alpha ln|E| = C; returns (n, 2) points."""
    r0, r1 = radius_range
    if not (r0 > 0 and r1 > 0):
        raise ValueError("isochrone radius range must exclude 0")
    r = np.geomspace(r0, r1, n)
    theta = C - alpha * np.log(r)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def reduce_to_landau_stuart(p: LaserParams) -> LandauStuartParams:
    """Centre-manifold reduction; the returned model runs in time t~ = g*gamma*t."""
    return LandauStuartParams(J=p.J, DeltaTilde=p.Delta / p.g_gamma, alpha=p.alpha)


def centre_manifold_residual(state: State, J: float) -> float:
    return abs(state.n - (J - state.e_re**2 - state.e_im**2))


def on_cycle_state(p: Params, phase: float = 0.0) -> State:
    """A point of the limit cycle (|E|^2, N) = (J, 0)."""
    if not p.J > 0:
        raise ValueError("limit cycle requires J > 0")
    r = math.sqrt(p.J)
    return State(r * math.cos(phase), r * math.sin(phase), 0.0)


def params_from_dict(d: dict) -> Params:
    d = dict(d)
    kind = d.pop("model", d.pop("kind", "laser"))
    if kind == "laser":
        return LaserParams(**{k: float(v) for k, v in d.items()})
    if kind in ("landau_stuart", "ls"):
        return LandauStuartParams(**{k: float(v) for k, v in d.items()})
    raise ValueError(f"unknown model {kind!r}")


def params_to_dict(p: Params) -> dict:
    return {"model": p.kind, **dataclasses.asdict(p)}
