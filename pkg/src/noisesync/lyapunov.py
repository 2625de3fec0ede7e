"""Largest Lyapunov exponent by tangent-vector renormalisation."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import _kernels as K
from .integrate import SCHEMES, _model_code, default_dt, noise_chunk, refinement_level
from .models import BlowUpError, FloquetSet, LandauStuartParams, LaserParams, Params, floquet_closed_form
from .noise import NoisePath, NoiseSpec

CHUNK = 1 << 16


@dataclasses.dataclass
class LyapunovEstimate:
    lambda_max: float
    stderr: float
    t_total: float
    n_renorm: int
    seed_set: tuple
    mean_intensity: float = float("nan")
    block_values: np.ndarray = dataclasses.field(default=None, repr=False)

    def sign(self, k: float = 2.0) -> int:
        """+1 / -1 when the estimate is k standard errors away from zero, else 0."""
        if self.lambda_max > k * self.stderr:
            return 1
        if self.lambda_max < -k * self.stderr:
            return -1
        return 0


def default_burn_in(p: Params) -> float:
    """Twenty relaxation times 1/|Re mu2| (or a fixed span when there is no cycle)."""
    if p.J > 0:
        return 20.0 / abs(floquet_closed_form(p).mu2.real)
    return 20.0


def random_initial(p: Params, ic_seed: int = 0) -> np.ndarray:
    """A point drawn uniformly from the disc |E| < 2 sqrt(J) with N = 0."""
    rng = np.random.default_rng([ic_seed, 7])
    R = 2.0 * math.sqrt(abs(p.J)) if p.J != 0 else 1.0
    r = R * math.sqrt(rng.uniform(0.05, 1.0))
    th = rng.uniform(0, 2 * math.pi)
    return np.array([r * math.cos(th), r * math.sin(th), 0.0])


def block_bootstrap_stderr(values: np.ndarray, n_boot: int = 2000, seed: int = 0) -> float:
    """Standard error of the mean of block averages by bootstrap resampling."""
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng([seed, 11])
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    return float(values[idx].mean(axis=1).std(ddof=1))


def estimate_lambda_max(
    p: Params,
    noise_spec: NoiseSpec,
    horizon: float,
    burn_in: float | None = None,
    renorm_interval: int = 10,
    dt: float | None = None,
    n_blocks: int = 20,
    scheme: str = "stochastic_heun",
    ic_seed: int = 0,
    initial=None,
) -> LyapunovEstimate:
    """Time-averaged log growth of a renormalised tangent vector.

    The first ``burn_in`` time units are discarded for both the state and
    the tangent direction.  The horizon is split into ``n_blocks`` equal
    blocks whose averages feed a bootstrap error bar.
    """
    if burn_in is None:
        burn_in = default_burn_in(p)
    if dt is None:
        dt = min(default_dt(p), noise_spec.dt_grid)
    if not (horizon > 0 and burn_in >= 0):
        raise ValueError("need horizon > 0 and burn_in >= 0")
    if n_blocks < 2:
        raise ValueError("need at least two blocks")
    nh = int(round(horizon / dt))
    nb = int(round(burn_in / dt))
    if nh < n_blocks * renorm_interval:
        raise ValueError(f"horizon {horizon} too short for {n_blocks} blocks at dt={dt}")
    path = NoisePath(noise_spec)
    stochastic = scheme != "rk4_deterministic" and noise_spec.d_ext > 0
    level = refinement_level(path, dt) if stochastic else 0
    code = _model_code(p)
    pk = p.packed()
    fp = np.zeros(3)
    sc = SCHEMES[scheme]

    x = random_initial(p, ic_seed) if initial is None else np.array(initial, dtype=float).copy()
    if x.size == 2:
        x = np.append(x, 0.0)
    rng = np.random.default_rng([ic_seed, 13])
    v = rng.standard_normal(3)
    if isinstance(p, LandauStuartParams):
        x[2] = 0.0
        v[2] = 0.0
    v /= np.linalg.norm(v)

    blocks = np.zeros(n_blocks)
    acc = np.zeros(3)
    total = nb + nh
    n = 0
    n_renorm_burn = 0
    while n < total:
        # chunk boundary at the end of burn-in so accounting starts clean
        end = nb if n < nb else total
        c = min(CHUNK, end - n)
        if stochastic:
            dw, _ = noise_chunk(path, n, c, level)
        else:
            dw = np.zeros((c, 2))
        rel = np.arange(n, n + c) - nb
        bos = np.where(rel >= 0, (rel * n_blocks) // nh, -1).astype(np.int64)
        st, fail = K.tangent_chunk(code, pk, fp, sc, x, v, n, dt, dw, renorm_interval, acc, bos, blocks)
        if st:
            raise BlowUpError("trajectory blew up during Lyapunov estimate", fail * dt)
        n += c
        if n == nb:
            n_renorm_burn = int(acc[1])
    vals = blocks / (horizon / n_blocks)
    lam = float(vals.mean())
    se = block_bootstrap_stderr(vals, seed=noise_spec.seed)
    return LyapunovEstimate(
        lambda_max=lam,
        stderr=se,
        t_total=nh * dt,
        n_renorm=int(acc[1]) - n_renorm_burn,
        seed_set=(noise_spec.seed,),
        mean_intensity=acc[2] / nh,
        block_values=vals,
    )


def lambda_vs_seed(p: Params, noise_spec: NoiseSpec, horizon: float, n_seeds: int, **kw) -> list[LyapunovEstimate]:
    """Repeat the estimate under ``n_seeds`` independent forcing realisations."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    return [
        estimate_lambda_max(p, noise_spec.replace(seed=noise_spec.seed + i), horizon, **kw) for i in range(n_seeds)
    ]


def pooled_stderr(estimates) -> float:
    """Standard error of the mean of independent estimates."""
    return math.sqrt(sum(e.stderr**2 for e in estimates)) / len(estimates)


def _lyapunov_spectrum(p: Params, horizon: float, burn_in: float, dt: float, qr_every: int = 5):
    dim = 3 if isinstance(p, LaserParams) else 2
    code = _model_code(p)
    pk = p.packed()
    r = math.sqrt(p.J)
    x = np.array([r, 0.0, 0.0])
    Q = np.zeros((3, 3))
    rng = np.random.default_rng(5)
    Q[:dim, :dim] = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    junk = np.zeros(dim)
    K.basis_chunk(code, pk, x, Q, dim, int(round(burn_in / dt)), dt, qr_every, junk)
    sums = np.zeros(dim)
    nh = int(round(horizon / dt))
    K.basis_chunk(code, pk, x, Q, dim, nh, dt, qr_every, sums)
    return sums / (nh * dt)


def _propagator_eigs(p: Params, tau: float, dt: float) -> np.ndarray:
    """Eigenvalues of log(Phi(tau))/tau at an on-cycle equilibrium of the Delta=0 model."""
    q = p.replace(Delta=0.0) if isinstance(p, LaserParams) else p.replace(DeltaTilde=0.0)
    dim = 3 if isinstance(p, LaserParams) else 2
    x = np.array([math.sqrt(p.J), 0.0, 0.0])
    Q = np.zeros((3, 3))
    Q[:dim, :dim] = np.eye(dim)
    # qr_every beyond the step count leaves the basis unnormalised until the end
    nsteps = int(round(tau / dt))
    Phi = np.zeros((dim, dim))
    for c in range(dim):
        B = np.zeros((3, 3))
        B[c, 0] = 1.0
        s = np.zeros(1)
        xx = x.copy()
        K.basis_chunk(_model_code(q), q.packed(), xx, B, 1, nsteps, dt, nsteps + 1, s)
        Phi[:, c] = B[:dim, 0] * math.exp(s[0])
    return np.log(np.linalg.eigvals(Phi).astype(complex)) / tau


def floquet_spectrum_numeric(
    p: Params, horizon: float | None = None, burn_in: float | None = None, dt: float | None = None
) -> FloquetSet:
    """Floquet exponents of the unforced cycle computed from the linearised flow.

    Real parts are Lyapunov exponents from a full orthonormalised tangent
    basis integrated along the cycle; imaginary parts come from the
    eigenvalues of the short-time propagator at an on-cycle point.
    """
    if not p.J > 0:
        raise ValueError(f"no limit cycle for J={p.J} <= 0")
    rate = abs(floquet_closed_form(p).mu2.real)
    fastest = rate
    if isinstance(p, LaserParams):
        cf = floquet_closed_form(p)
        fastest = max(abs(cf.mu2), abs(cf.mu3))
    if dt is None:
        dt = min(0.02 / fastest, 0.1 / rate)
    if burn_in is None:
        burn_in = 60.0 / rate
    if horizon is None:
        horizon = 2000.0 / rate
    lams = np.sort(_lyapunov_spectrum(p, horizon, burn_in, dt))[::-1]
    tau = min(0.5 / fastest, 1.0 / rate)
    eigs = _propagator_eigs(p, tau, min(dt, tau / 200))
    eigs = eigs[np.argsort(-eigs.real)]
    if isinstance(p, LandauStuartParams):
        return FloquetSet(float(lams[0]), complex(lams[1]), None, "landau_stuart")
    im = abs(eigs[1].imag)
    if im > 1e-6 * max(1.0, abs(eigs[1])):
        return FloquetSet(float(lams[0]), complex(lams[1], im), complex(lams[2], -im), "underdamped")
    return FloquetSet(float(lams[0]), complex(lams[1]), complex(lams[2]), "overdamped")
