"""M uncoupled lasers with intrinsic noise and a common external forcing."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import _kernels as K
from .integrate import Monochromatic, noise_chunk, refinement_level, step_index
from .models import BlowUpError, LaserParams
from .noise import BLOCK, NoisePath, NoiseSpec

D_E_DEFAULT = 0.05
D_N_DEFAULT = 3.5e-8

SYNC_LO = 0.8
SYNC_HI = 1.2

CHUNK = BLOCK


@dataclasses.dataclass(frozen=True)
class EnsembleConfig:
    m: int = 50
    forcing: str = "none"  # none | monochromatic | white_noise
    K: float = 0.0
    nu_ext: float | None = None  # None: resonant with the laser (nu_ext = Delta)
    d_ext: float = 0.0
    d_e: float = D_E_DEFAULT
    d_n: float = D_N_DEFAULT
    horizon: float = 250.0  # total span including burn-in
    burn_in: float = 50.0
    dt: float = 1e-4
    sample_every: int = 100  # steps between stored I_M samples

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.forcing not in ("none", "monochromatic", "white_noise"):
            raise ValueError(f"unknown forcing {self.forcing!r}")
        if self.K < 0 or self.d_ext < 0 or self.d_e < 0 or self.d_n < 0:
            raise ValueError("forcing and noise strengths must be >= 0")
        if not self.horizon > self.burn_in >= 0:
            raise ValueError("need horizon > burn_in >= 0")

    def replace(self, **kw) -> "EnsembleConfig":
        return dataclasses.replace(self, **kw)


@dataclasses.dataclass
class OrderParameterResult:
    m: int
    mean_im: float
    mean_ifr: float
    ratio: float
    samples: np.ndarray
    mean_member_intensity: float
    sync_class: str = ""
    histogram: tuple | None = None

    @property
    def im_over_ifr(self) -> float:
        return self.mean_im / self.mean_ifr


def _noise_spec(cfg: EnsembleConfig, seed: int) -> NoiseSpec:
    d_ext = cfg.d_ext if cfg.forcing == "white_noise" else 0.0
    return NoiseSpec(d_ext=d_ext, d_e=cfg.d_e, d_n=cfg.d_n, seed=seed, dt_grid=cfg.dt)


def _initial_states(params: LaserParams, m: int, seed: int) -> np.ndarray:
    """Members start on the cycle with independent uniformly random phases."""
    rng = np.random.default_rng([seed, 17])
    th = rng.uniform(0, 2 * np.pi, m)
    r = math.sqrt(max(params.J, 0.0))
    return np.column_stack([r * np.cos(th), r * np.sin(th), np.zeros(m)])


def _integrate(params, cfg, path, X, channel_offset=0, record=True):
    """Lock-step integration; returns (mean I_M, samples, mean member intensity)."""
    fp = np.zeros(3)
    if cfg.forcing == "monochromatic":
        nu = params.Delta if cfg.nu_ext is None else cfg.nu_ext
        fp = Monochromatic(cfg.K, nu).packed()
    level = refinement_level(path, cfg.dt)
    m = X.shape[0]
    nb = step_index(cfg.burn_in, cfg.dt)
    total = step_index(cfg.horizon, cfg.dt)
    pk = params.packed()
    im_sum = 0.0
    e2_sum = 0.0
    count = 0
    samples = []
    n = 0
    while n < total:
        end = nb if n < nb else total
        c = min(CHUNK - n % CHUNK, end - n)
        ext, _ = noise_chunk(path, n, c, level)
        if path.spec.d_e > 0 or path.spec.d_n > 0:
            intr = np.empty((c, m, 3))
            for j in range(m):
                for k in range(3):
                    intr[:, j, k] = path.increments(2 + 3 * (j + channel_offset) + k, n, c, level)
        else:
            intr = np.zeros((0, 1, 3))
        im = np.empty(c)
        e2 = np.empty(c)
        bad, fail = K.ensemble_intensity(K.LASER, pk, fp, X, n, cfg.dt, ext, intr, im, e2)
        if bad >= 0:
            raise BlowUpError(f"ensemble member {bad} blew up", fail * cfg.dt)
        if n >= nb:
            im_sum += float(im.sum())
            e2_sum += float(e2.sum())
            count += c
            if record:
                # sample on the absolute step grid so chunking does not matter
                first = (-(n + 1)) % cfg.sample_every
                samples.append(im[first :: cfg.sample_every].copy())
        n += c
    s = np.concatenate(samples) if samples else np.zeros(0)
    return im_sum / count, s, e2_sum / count


def free_running_intensity(params: LaserParams, cfg: EnsembleConfig, seed: int) -> float:
    """<|E|^2> of a single unforced laser with the ensemble's intrinsic noise.

    Uses the intrinsic channels of oscillator index ``m``, which no ensemble
    member reads.
    """
    spec = NoiseSpec(d_ext=0.0, d_e=cfg.d_e, d_n=cfg.d_n, seed=seed, dt_grid=cfg.dt)
    X = _initial_states(params, 1, seed + 1)
    mono_off = cfg.replace(forcing="none")
    _, _, e2 = _integrate(params, mono_off, NoisePath(spec), X, channel_offset=cfg.m, record=False)
    return e2


def classify_sync(result: OrderParameterResult) -> str:
    """Synchronisation class from the ratio <I_M> / (M^2 <I_fr>)."""
    r = result.ratio
    m = result.m
    if r > SYNC_HI:
        return "trivial"
    if r >= SYNC_LO:
        return "synchronised"
    if r * m * m <= SYNC_HI * m:
        return "unsynchronised"
    return "partial"


def histogram_im(result: OrderParameterResult, bins=50, normalise_by_sync: bool = True):
    """Unit-mass histogram of I_M(t) samples.

    With ``normalise_by_sync`` the abscissa is I_M / (M^2 <I_fr>).
    Returns (edges, mass).
    """
    s = np.asarray(result.samples, dtype=float)
    if s.size == 0:
        raise ValueError("no I_M samples to bin")
    if normalise_by_sync:
        s = s / (result.m**2 * result.mean_ifr)
    counts, edges = np.histogram(s, bins=bins)
    return edges, counts / counts.sum()


def run_ensemble(params: LaserParams, cfg: EnsembleConfig, seed: int = 0, bins=50) -> OrderParameterResult:
    """Integrate the ensemble and reduce it to the averaged order parameter."""
    path = NoisePath(_noise_spec(cfg, seed))
    X = _initial_states(params, cfg.m, seed)
    mean_im, samples, member = _integrate(params, cfg, path, X)
    ifr = free_running_intensity(params, cfg, seed)
    res = OrderParameterResult(
        m=cfg.m,
        mean_im=mean_im,
        mean_ifr=ifr,
        ratio=mean_im / (cfg.m**2 * ifr),
        samples=samples,
        mean_member_intensity=member,
    )
    res.sync_class = classify_sync(res)
    res.histogram = histogram_im(res, bins)
    return res


def sweep_forcing_strength(params: LaserParams, cfg_template: EnsembleConfig, strength_axis, seed: int = 0):
    """Order-parameter curve versus K (monochromatic) or D_ext (white noise).

    Returns a list of dict rows; failed points carry ``status='blowup'``.
    """
    rows = []
    for s in strength_axis:
        if cfg_template.forcing == "monochromatic":
            cfg = cfg_template.replace(K=float(s))
        elif cfg_template.forcing == "white_noise":
            cfg = cfg_template.replace(d_ext=float(s))
        else:
            raise ValueError("strength sweep needs monochromatic or white_noise forcing")
        try:
            r = run_ensemble(params, cfg, seed)
            rows.append(
                {"strength": float(s), "mean_im": r.mean_im, "mean_ifr": r.mean_ifr, "ratio": r.ratio,
                 "sync_class": r.sync_class, "status": "ok"}
            )
        except BlowUpError as e:
            rows.append({"strength": float(s), "mean_im": math.nan, "mean_ifr": math.nan, "ratio": math.nan,
                         "sync_class": "", "status": f"blowup@{e.t}"})
    return rows
