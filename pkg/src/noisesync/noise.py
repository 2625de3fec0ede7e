"""Seed-reproducible Gaussian noise paths indexed by absolute time.

Every increment is a pure function of ``(seed, channel, cell index)``: cells
are grouped into fixed-size blocks and each block is drawn from its own
Philox stream keyed by a :class:`numpy.random.SeedSequence`.  Replaying a
window, querying out of order, or starting a pullback run further in the
past therefore always sees the same realisation.

Channels
--------
0, 1                  external forcing (real, imaginary)
2 + 3j, 3 + 3j, 4 + 3j  intrinsic noise of oscillator j (Re E, Im E, N)

Sub-stepping uses Levy's midpoint refinement, so a cell split into ``2**k``
sub-steps carries sub-increments that sum exactly to the cell increment.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

BLOCK = 8192

EXT_RE = 0
EXT_IM = 1


def intrinsic_channel(j: int, component: int) -> int:
    """Channel id of oscillator ``j``'s intrinsic noise (0: Re E, 1: Im E, 2: N)."""
    if j < 0 or component not in (0, 1, 2):
        raise ValueError(f"bad intrinsic channel ({j}, {component})")
    return 2 + 3 * j + component


@dataclasses.dataclass(frozen=True)
class NoiseSpec:
    d_ext: float = 0.0
    d_e: float = 0.0
    d_n: float = 0.0
    seed: int = 0
    dt_grid: float = 1e-4

    def __post_init__(self):
        for name in ("d_ext", "d_e", "d_n"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not (self.dt_grid > 0 and math.isfinite(self.dt_grid)):
            raise ValueError(f"dt_grid must be > 0, got {self.dt_grid}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")

    def variance(self, channel: int) -> float:
        """Increment variance of one grid cell on ``channel``."""
        if channel in (EXT_RE, EXT_IM):
            return self.d_ext * self.dt_grid
        comp = (channel - 2) % 3
        if comp == 2:
            return 2.0 * self.d_n * self.dt_grid
        return self.d_e * self.dt_grid

    def replace(self, **kw) -> "NoiseSpec":
        return dataclasses.replace(self, **kw)


def scale_for_rescaled_time(spec: NoiseSpec, g_gamma: float) -> NoiseSpec:
    """Intensities seen by the Landau-Stuart model in rescaled time t~ = g*gamma*t."""
    if not g_gamma > 0:
        raise ValueError(f"g_gamma must be > 0, got {g_gamma}")
    return spec.replace(d_ext=spec.d_ext / g_gamma, d_e=spec.d_e / g_gamma, d_n=spec.d_n / g_gamma)


def unscale_from_rescaled_time(spec: NoiseSpec, g_gamma: float) -> NoiseSpec:
    if not g_gamma > 0:
        raise ValueError(f"g_gamma must be > 0, got {g_gamma}")
    return spec.replace(d_ext=spec.d_ext * g_gamma, d_e=spec.d_e * g_gamma, d_n=spec.d_n * g_gamma)


def _zigzag(i: int) -> int:
    return 2 * i if i >= 0 else -2 * i - 1


class NoisePath:
    """A fixed realisation of all noise channels of a :class:`NoiseSpec`.

    The path has unbounded coverage in both time directions; ``origin_time``
    is the time of cell index 0.
    """

    def __init__(self, spec: NoiseSpec, origin_time: float = 0.0):
        self.spec = spec
        self.origin_time = float(origin_time)

    def __repr__(self):
        return f"NoisePath({self.spec!r}, origin_time={self.origin_time})"

    def cell_index(self, t: float) -> int:
        """Index of the grid cell starting at time ``t`` (must lie on the grid)."""
        x = (t - self.origin_time) / self.spec.dt_grid
        i = round(x)
        if abs(x - i) > 1e-6:
            raise ValueError(f"time {t} is not on the noise grid (dt_grid={self.spec.dt_grid})")
        return int(i)

    def _normals(self, channel: int, block: int, level: int) -> np.ndarray:
        ss = np.random.SeedSequence(
            [int(self.spec.seed) & 0xFFFFFFFF, int(self.spec.seed) >> 32, channel, _zigzag(block), level]
        )
        n = BLOCK * (1 << max(level - 1, 0))
        return np.random.Generator(np.random.Philox(ss)).standard_normal(n)

    def _standard(self, channel: int, start: int, count: int, level: int) -> np.ndarray:
        """Standard normals for cells [start, start+count) of the given refinement level.

        Level 0 yields one value per cell, level l >= 1 yields 2**(l-1).
        """
        per = 1 << max(level - 1, 0)
        out = np.empty(count * per)
        b0 = start // BLOCK
        b1 = (start + count - 1) // BLOCK
        pos = 0
        for b in range(b0, b1 + 1):
            z = self._normals(channel, b, level)
            lo = max(start, b * BLOCK) - b * BLOCK
            hi = min(start + count, (b + 1) * BLOCK) - b * BLOCK
            seg = z[lo * per : hi * per]
            out[pos : pos + seg.size] = seg
            pos += seg.size
        return out

    def increments(self, channel: int, start: int, count: int, level: int = 0) -> np.ndarray:
        """Scaled increments for ``count`` consecutive sub-steps.

        Sub-steps have length ``dt_grid / 2**level``; ``start`` is measured in
        sub-steps from the origin.
        """
        if count <= 0:
            return np.zeros(0)
        var = self.spec.variance(channel)
        if var == 0.0:
            return np.zeros(count)
        if level == 0:
            return math.sqrt(var) * self._standard(channel, start, count, 0)
        nsub = 1 << level
        c0 = start // nsub
        c1 = (start + count - 1) // nsub
        ncell = c1 - c0 + 1
        w = math.sqrt(var) * self._standard(channel, c0, ncell, 0)
        v = var
        for lev in range(1, level + 1):
            z = self._standard(channel, c0, ncell, lev)
            half = 0.5 * math.sqrt(v) * z
            nxt = np.empty(w.size * 2)
            nxt[0::2] = 0.5 * w + half
            nxt[1::2] = 0.5 * w - half
            w = nxt
            v *= 0.5
        off = start - c0 * nsub
        return w[off : off + count]

    def ext_block(self, start: int, count: int, level: int = 0) -> np.ndarray:
        """External forcing increments, shape (count, 2)."""
        out = np.empty((count, 2))
        out[:, 0] = self.increments(EXT_RE, start, count, level)
        out[:, 1] = self.increments(EXT_IM, start, count, level)
        return out

    def intrinsic_block(self, start: int, count: int, m: int, level: int = 0) -> np.ndarray:
        """Intrinsic increments for oscillators 0..m-1, shape (count, m, 3)."""
        out = np.empty((count, m, 3))
        if self.spec.d_e == 0.0 and self.spec.d_n == 0.0:
            out[:] = 0.0
            return out
        for j in range(m):
            for c in range(3):
                out[:, j, c] = self.increments(intrinsic_channel(j, c), start, count, level)
        return out


def sample_increment(path: NoisePath, channel: int, time_index: int, level: int = 0) -> float:
    """The unique increment of ``channel`` in cell (or sub-step) ``time_index``."""
    return float(path.increments(channel, time_index, 1, level)[0])
