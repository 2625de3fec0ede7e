"""Maps of lambda_max over (D_ext, J, alpha) and the zero-crossing loci.

Every grid point is an independent job whose noise seed is a pure function
of its coordinates, so a sweep gives the same numbers whatever the worker
count or the order in which jobs finish.  Sweeps checkpoint to a JSON file
that is rewritten atomically after each finished job.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Iterable, Sequence

import numpy as np

from .lyapunov import estimate_lambda_max
from .models import BlowUpError, LandauStuartParams, LaserParams, Params, relaxation_rate
from .noise import NoiseSpec

CHECKPOINT_FORMAT = "noisesync-sweep-checkpoint/1"
MODELS = ("laser", "landau_stuart")
STATUS_OK = "ok"
STATUS_BLOWUP = "blowup"
STATUS_ERROR = "error"

TABLE_COLUMNS = [
    "job_id", "model", "alpha", "d_ext", "J", "seed", "lambda_max", "stderr",
    "mean_intensity", "sign", "t_total", "status",
]


class CheckpointMismatch(RuntimeError):
    """The checkpoint does not belong to the requested sweep or was altered."""


@dataclasses.dataclass(frozen=True)
class LyapunovSettings:
    """How each grid point is estimated.

    With ``relative=True`` the horizon and burn-in are given in units of
    the relaxation time 1/|Re mu2| of the point's J.  For the Landau-Stuart
    model the step is scaled the same way, which keeps the step count per
    estimate fixed across J (the model has no other time scale).  Laser
    steps are always absolute.
    """

    horizon: float = 200.0
    burn_in: float | None = None
    dt: float | None = None
    n_blocks: int = 20
    renorm_interval: int = 10
    relative: bool = False
    k_sigma: float = 2.0

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be > 0")

    def resolved(self, p: Params) -> tuple[float, float | None, float]:
        """(horizon, burn_in, dt) in model time for the parameters ``p``."""
        laser = isinstance(p, LaserParams)
        dt = self.dt if self.dt is not None else (1e-4 if laser else 1e-2)
        if not self.relative:
            return self.horizon, self.burn_in, dt
        tau = 1.0 / relaxation_rate(p)
        burn = None if self.burn_in is None else self.burn_in * tau
        return self.horizon * tau, burn, dt if laser else dt * tau


def _increasing(values, name, positive=True):
    v = [float(x) for x in values]
    if any(b <= a for a, b in zip(v, v[1:])):
        raise ValueError(f"{name} values must be strictly increasing")
    if positive and any(x <= 0 for x in v):
        raise ValueError(f"{name} values must be > 0")
    return tuple(v)


@dataclasses.dataclass(frozen=True)
class SweepGrid:
    model: str
    alpha: tuple = (0.0,)
    d_ext: tuple = ()
    J: tuple = ()
    settings: LyapunovSettings = LyapunovSettings()
    base_seed: int = 0
    gamma: float = 500.0
    g: float = 2.765

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        object.__setattr__(self, "alpha", _increasing(self.alpha, "alpha", positive=False))
        object.__setattr__(self, "d_ext", _increasing(self.d_ext, "d_ext"))
        object.__setattr__(self, "J", _increasing(self.J, "J"))

    def jobs(self) -> list[dict]:
        out = []
        for ia, a in enumerate(self.alpha):
            for idd, d in enumerate(self.d_ext):
                for ij, j in enumerate(self.J):
                    out.append(
                        {
                            "job_id": f"a{ia:03d}-d{idd:03d}-j{ij:03d}",
                            "model": self.model,
                            "alpha": a,
                            "d_ext": d,
                            "J": j,
                            "seed": job_seed(self.base_seed, self.model, a, d, j),
                        }
                    )
        return out

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["alpha"] = list(self.alpha)
        d["d_ext"] = list(self.d_ext)
        d["J"] = list(self.J)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepGrid":
        d = dict(d)
        d["settings"] = LyapunovSettings(**d.get("settings", {}))
        for key in ("alpha", "d_ext", "J"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def digest(self) -> str:
        return _sha(self.to_dict())


def log_axis(lo: float, hi: float, n: int) -> tuple:
    """n logarithmically spaced values from lo to hi inclusive."""
    if n == 0:
        return ()
    if not 0 < lo <= hi:
        raise ValueError("log axis needs 0 < lo <= hi")
    return tuple(float(x) for x in np.geomspace(lo, hi, n))


def _sha(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def job_seed(base_seed: int, model: str, *coords: float) -> int:
    """Seed from the job coordinates alone (exact float bits, not formatting)."""
    h = hashlib.sha256(f"{int(base_seed)}|{model}|".encode())
    for c in coords:
        h.update(np.float64(c).tobytes())
    return int.from_bytes(h.digest()[:8], "little") >> 1


def make_params(model: str, alpha: float, J: float, gamma: float = 500.0, g: float = 2.765) -> Params:
    if model == "laser":
        return LaserParams(J=J, alpha=alpha, gamma=gamma, g=g)
    return LandauStuartParams(J=J, alpha=alpha)


def evaluate_point(model, alpha, d_ext, J, seed, settings: LyapunovSettings, gamma=500.0, g=2.765) -> dict:
    """One lambda_max estimate; blow-ups become a row with status 'blowup'."""
    p = make_params(model, alpha, J, gamma, g)
    horizon, burn_in, dt = settings.resolved(p)
    spec = NoiseSpec(d_ext=d_ext, seed=seed, dt_grid=dt)
    row = {"model": model, "alpha": alpha, "d_ext": d_ext, "J": J, "seed": seed}
    try:
        est = estimate_lambda_max(
            p, spec, horizon, burn_in=burn_in, dt=dt, n_blocks=settings.n_blocks,
            renorm_interval=settings.renorm_interval, ic_seed=seed,
        )
    except BlowUpError as e:
        row.update(lambda_max=math.nan, stderr=math.nan, mean_intensity=math.nan, sign=0,
                   t_total=math.nan, status=f"{STATUS_BLOWUP}@{e.t}")
        return row
    row.update(
        lambda_max=est.lambda_max,
        stderr=est.stderr,
        mean_intensity=float(est.mean_intensity),
        sign=est.sign(settings.k_sigma),
        t_total=est.t_total,
        status=STATUS_OK,
    )
    return row


def _run_job(args):
    job, settings, gamma, g = args
    row = evaluate_point(job["model"], job["alpha"], job["d_ext"], job["J"], job["seed"], settings, gamma, g)
    row["job_id"] = job["job_id"]
    return row


def default_workers() -> int:
    return os.cpu_count() or 1


def _map(fn, items: list, workers: int):
    """Ordered map; yields results as (index, value) in completion order."""
    if workers <= 1 or len(items) <= 1:
        for i, it in enumerate(items):
            yield i, fn(it)
        return
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = {ex.submit(fn, it): i for i, it in enumerate(items)}
        for f in as_completed(futures):
            yield futures[f], f.result()


# -- checkpointing -----------------------------------------------------------


def _atomic_write_json(path, obj) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ckpt-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, sort_keys=True, indent=1)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _checkpoint_obj(grid: SweepGrid, done: dict) -> dict:
    body = {"config_hash": grid.digest(), "jobs": done}
    return {
        "format": CHECKPOINT_FORMAT,
        "grid": grid.to_dict(),
        "config_hash": body["config_hash"],
        "jobs": done,
        "n_jobs": len(grid.jobs()),
        "digest": _sha(body),
    }


def load_checkpoint(path, grid: SweepGrid | None = None) -> tuple[SweepGrid, dict]:
    """Read and verify a checkpoint; returns (grid, finished rows by job id).

    Raises CheckpointMismatch if the file was edited or belongs to another grid.
    """
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise CheckpointMismatch(f"checkpoint is not valid JSON: {e}") from None
    if obj.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointMismatch("unknown checkpoint format")
    try:
        stored = SweepGrid.from_dict(obj["grid"])
    except (TypeError, ValueError, KeyError) as e:
        raise CheckpointMismatch(f"checkpoint grid unreadable: {e}") from None
    if stored.digest() != obj.get("config_hash"):
        raise CheckpointMismatch("checkpoint grid does not match its recorded hash")
    if _sha({"config_hash": obj["config_hash"], "jobs": obj.get("jobs", {})}) != obj.get("digest"):
        raise CheckpointMismatch("checkpoint contents do not match their digest")
    if grid is not None and grid.digest() != stored.digest():
        raise CheckpointMismatch("checkpoint was written for a different sweep configuration")
    return stored, obj["jobs"]


@dataclasses.dataclass
class SweepResult:
    grid: SweepGrid
    rows: list  # ordered like grid.jobs(); only finished jobs
    complete: bool
    n_computed: int  # jobs evaluated in this call

    def lambda_array(self) -> np.ndarray:
        """lambda_max reshaped to (alpha, d_ext, J); NaN where missing."""
        g = self.grid
        out = np.full((len(g.alpha), len(g.d_ext), len(g.J)), np.nan)
        for r in self.rows:
            ia, idd, ij = (int(s[1:]) for s in r["job_id"].split("-"))
            out[ia, idd, ij] = r["lambda_max"]
        return out

    def sign_array(self) -> np.ndarray:
        g = self.grid
        out = np.zeros((len(g.alpha), len(g.d_ext), len(g.J)), dtype=int)
        for r in self.rows:
            ia, idd, ij = (int(s[1:]) for s in r["job_id"].split("-"))
            out[ia, idd, ij] = r["sign"]
        return out


def sweep_lambda(
    grid: SweepGrid,
    checkpoint: str | os.PathLike | None = None,
    workers: int = 1,
    max_jobs: int | None = None,
) -> SweepResult:
    """lambda_max at every grid point.

    Finished jobs found in ``checkpoint`` are reused, not recomputed.
    ``max_jobs`` caps how many new jobs this call evaluates, which leaves an
    incomplete checkpoint behind (used to exercise resume).
    """
    jobs = grid.jobs()
    done: dict = {}
    if checkpoint is not None and os.path.exists(checkpoint):
        _, done = load_checkpoint(checkpoint, grid)
    todo = [j for j in jobs if j["job_id"] not in done]
    if max_jobs is not None:
        todo = todo[: max(0, max_jobs)]
    computed = 0
    if checkpoint is not None and todo:
        _atomic_write_json(checkpoint, _checkpoint_obj(grid, done))
    args = [(j, grid.settings, grid.gamma, grid.g) for j in todo]
    for _, row in _map(_run_job, args, workers):
        done[row["job_id"]] = row
        computed += 1
        if checkpoint is not None:
            _atomic_write_json(checkpoint, _checkpoint_obj(grid, done))
    rows = [done[j["job_id"]] for j in jobs if j["job_id"] in done]
    return SweepResult(grid, rows, len(rows) == len(jobs), computed)


def resume_sweep(checkpoint, workers: int = 1, max_jobs: int | None = None) -> SweepResult:
    grid, _ = load_checkpoint(checkpoint)
    return sweep_lambda(grid, checkpoint, workers, max_jobs)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table_csv(rows: Iterable[dict], path, columns: Sequence[str] = TABLE_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


# -- zero-crossing loci ------------------------------------------------------


@dataclasses.dataclass
class LocusPoint:
    alpha: float
    fixed_value: float  # coordinate held fixed (D_ext when bisecting J, else J)
    lo: float
    hi: float
    lam_lo: float
    lam_hi: float
    se_lo: float
    se_hi: float
    crossing: float
    branch: int  # 1: lambda rises through zero with the bisected axis, 2: falls
    resolution_limited: bool
    n_evals: int

    @property
    def bracket_valid(self) -> bool:
        return self.lam_lo * self.lam_hi < 0 and abs(self.lam_lo) > 2 * self.se_lo and abs(self.lam_hi) > 2 * self.se_hi


@dataclasses.dataclass
class BifurcationLocus:
    model: str
    axis: str  # "J" or "d_ext"
    points: list

    def branch(self, j: int) -> list:
        return [p for p in self.points if p.branch == j]

    def as_triples(self) -> list[tuple]:
        """(alpha, D_ext, J) per point."""
        out = []
        for p in self.points:
            if self.axis == "J":
                out.append((p.alpha, p.fixed_value, p.crossing))
            else:
                out.append((p.alpha, p.crossing, p.fixed_value))
        return out

    def rows(self) -> list[dict]:
        out = []
        for p, (a, d, j) in zip(self.points, self.as_triples()):
            r = dataclasses.asdict(p)
            r.update(model=self.model, axis=self.axis, d_ext=d, J=j)
            out.append(r)
        return out


LOCUS_COLUMNS = [
    "model", "axis", "alpha", "d_ext", "J", "branch", "lo", "hi", "lam_lo", "lam_hi",
    "se_lo", "se_hi", "resolution_limited", "n_evals",
]


def _eval_line(args):
    model, alpha, fixed, axis, value, seed, settings, gamma, g = args
    d, j = (fixed, value) if axis == "J" else (value, fixed)
    return evaluate_point(model, alpha, d, j, seed, settings, gamma, g)


def locate_d_bifurcation(
    model: str,
    alpha: float,
    fixed_values: Sequence[float],
    scan,
    axis: str = "J",
    settings: LyapunovSettings = LyapunovSettings(),
    rel_tol: float = 0.02,
    base_seed: int = 0,
    workers: int = 1,
    max_rounds: int = 40,
    gamma: float = 500.0,
    g: float = 2.765,
) -> BifurcationLocus:
    """Zero crossings of lambda_max along ``axis`` at each fixed value.

    ``scan`` is a coarse increasing list of values along the bisected axis,
    or a function mapping a fixed value to such a list.
    Adjacent scan points whose signs are resolved (beyond ``k_sigma``
    standard errors) and opposite form brackets; unresolved scan points are
    skipped over.  Each bracket is bisected geometrically until its relative
    width is below ``rel_tol`` or the midpoint sign is unresolved.  All
    evaluations on one line share a seed (common random numbers), so the
    bisection follows one realisation.  No sign change gives no points.
    """
    if axis not in ("J", "d_ext"):
        raise ValueError("axis must be 'J' or 'd_ext'")
    scan_fn = scan if callable(scan) else (lambda f, _s=tuple(scan): _s)

    def seed_for(fixed):
        return job_seed(base_seed, model, alpha, fixed, -1.0 if axis == "J" else -2.0)

    lines = [float(f) for f in fixed_values]
    scans = [_increasing(scan_fn(f), "scan") for f in lines]
    tasks = [(model, alpha, f, axis, v, seed_for(f), settings, gamma, g) for f, sc in zip(lines, scans) for v in sc]
    res = [None] * len(tasks)
    for i, r in _map(_eval_line, tasks, workers):
        res[i] = r
    brackets = []  # [fixed, lo_val, lo_row, hi_val, hi_row, evals, resolution_limited]
    start = 0
    for f, sc in zip(lines, scans):
        rows = res[start : start + len(sc)]
        start += len(sc)
        resolved = [(v, r) for v, r in zip(sc, rows) if r["status"] == STATUS_OK and r["sign"] != 0]
        for (v0, r0), (v1, r1) in zip(resolved, resolved[1:]):
            if r0["sign"] != r1["sign"]:
                brackets.append([f, v0, r0, v1, r1, len(sc), False])
    for _ in range(max_rounds):
        active = [b for b in brackets if not b[6] and b[3] / b[1] - 1 > rel_tol]
        if not active:
            break
        tasks = [(model, alpha, b[0], axis, math.sqrt(b[1] * b[3]), seed_for(b[0]), settings, gamma, g) for b in active]
        out = [None] * len(tasks)
        for i, r in _map(_eval_line, tasks, workers):
            out[i] = r
        for b, r, t in zip(active, out, tasks):
            b[5] += 1
            mid = t[4]
            if r["status"] != STATUS_OK or r["sign"] == 0:
                b[6] = True  # resolution limited
            elif r["sign"] == b[2]["sign"]:
                b[1], b[2] = mid, r
            else:
                b[3], b[4] = mid, r
    points = []
    for f, lo, rlo, hi, rhi, n_ev, limited in brackets:
        l0, l1 = rlo["lambda_max"], rhi["lambda_max"]
        # linear interpolation of lambda in log(axis)
        w = l0 / (l0 - l1)
        crossing = math.exp(math.log(lo) + w * (math.log(hi) - math.log(lo)))
        points.append(
            LocusPoint(
                alpha=float(alpha), fixed_value=f, lo=lo, hi=hi, lam_lo=l0, lam_hi=l1,
                se_lo=rlo["stderr"], se_hi=rhi["stderr"], crossing=crossing,
                branch=1 if rlo["sign"] < 0 else 2, resolution_limited=limited, n_evals=n_ev,
            )
        )
    return BifurcationLocus(model, axis, points)


# -- power law ---------------------------------------------------------------


@dataclasses.dataclass
class BranchFit:
    branch: int
    n: int
    slope: float
    intercept: float
    C_free: float  # exp(intercept) of the free-slope fit
    C: float  # J / sqrt(2 D) averaged in log space (slope fixed at 1)
    residuals: list
    slope_stderr: float


def fit_power_law(
    points: Sequence[tuple],
    branches: Sequence[int] | None = None,
    intensity_cap: float | None = 0.10,
    intensities: Sequence[float] | None = None,
) -> dict:
    """Regress ln J on ln sqrt(2 D_ext) per branch.

    ``points`` are (D_ext, J, branch) triples (or a BifurcationLocus).  When
    ``intensities`` is given, points whose mean |E|^2 deviates from J by
    ``intensity_cap`` or more (relative) are dropped before fitting.
    Raises ValueError if a branch has fewer than four points.
    """
    if isinstance(points, BifurcationLocus):
        points = [(d, j, p.branch) for (a, d, j), p in zip(points.as_triples(), points.points)]
    pts = list(points)
    if branches is None:
        # taken before filtering so a branch emptied by the cap is reported
        branches = sorted({b for _, _, b in pts})
    if intensities is not None and intensity_cap is not None:
        keep = [abs(I / j - 1.0) < intensity_cap for (d, j, b), I in zip(pts, intensities)]
        pts = [p for p, k in zip(pts, keep) if k]
    out = {}
    for br in branches:
        sel = [(d, j) for d, j, b in pts if b == br]
        if len(sel) < 4:
            raise ValueError(f"branch {br} has {len(sel)} points; need at least 4")
        x = np.log(np.sqrt(2.0 * np.array([d for d, _ in sel])))
        y = np.log(np.array([j for _, j in sel]))
        A = np.column_stack([x, np.ones_like(x)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        dof = max(len(x) - 2, 1)
        s2 = float(resid @ resid) / dof
        sxx = float(((x - x.mean()) ** 2).sum())
        out[br] = BranchFit(
            branch=int(br), n=len(sel), slope=float(coef[0]), intercept=float(coef[1]),
            C_free=float(math.exp(coef[1])), C=float(math.exp((y - x).mean())),
            residuals=[float(r) for r in resid], slope_stderr=math.sqrt(s2 / sxx) if sxx > 0 else math.nan,
        )
    return out


# -- alpha_min ---------------------------------------------------------------


@dataclasses.dataclass
class AlphaMinResult:
    alpha_min: float
    bracket: tuple  # (largest resolved-negative alpha, smallest resolved-positive alpha)
    resolution_limited: bool  # some alphas inside the bracket were unresolved
    history: list  # (alpha, status, max lambda, its stderr), in evaluation order

    @property
    def alpha_positive(self) -> float:
        """Smallest alpha at which a resolved positive point was seen."""
        return self.bracket[1]


def _probe_status(model, alpha, probe, settings, base_seed, workers, gamma, g):
    tasks = [
        (model, alpha, d, "J", j, job_seed(base_seed, model, d, j, -3.0), settings, gamma, g)
        for d, j in probe
    ]
    rows = [None] * len(tasks)
    for i, r in _map(_eval_line, tasks, workers):
        rows[i] = r
    ok = [r for r in rows if r["status"] == STATUS_OK]
    if not ok:
        return 0, math.nan, math.nan, rows
    best = max(ok, key=lambda r: r["lambda_max"])
    if any(r["sign"] > 0 for r in ok):
        status = 1
    elif all(r["sign"] < 0 for r in ok):
        status = -1
    else:
        status = 0
    return status, best["lambda_max"], best["stderr"], rows


def find_alpha_min(
    model: str,
    search_range: tuple,
    probe: Sequence[tuple],
    settings: LyapunovSettings = LyapunovSettings(),
    tol: float = 0.05,
    base_seed: int = 0,
    workers: int = 1,
    gamma: float = 500.0,
    g: float = 2.765,
    max_evals: int = 30,
) -> AlphaMinResult:
    """Onset in alpha of a positive-lambda point on a (D_ext, J) probe grid.

    A probe set is 'positive' if any point is resolved positive and
    'negative' if all points are resolved negative; anything else is
    unresolved.  The search range must be negative at its lower end and
    positive at its upper end.  Bisection continues on both sides of any
    unresolved band until the gaps next to the resolved ends are narrower
    than ``tol``; the estimate is the centre of the final bracket.  The
    same seeds are used at every alpha.
    """
    lo, hi = (float(a) for a in search_range)
    if not lo < hi:
        raise ValueError("search range must be increasing")
    hist = []
    status = {}

    def probe_at(a):
        s, m, se, _ = _probe_status(model, a, probe, settings, base_seed, workers, gamma, g)
        hist.append((a, s, m, se))
        status[a] = s
        return s

    s_lo, s_hi = probe_at(lo), probe_at(hi)
    if s_lo != -1 or s_hi != 1:
        raise ValueError(
            f"range {search_range} does not bracket the onset (status {s_lo} at {lo}, {s_hi} at {hi})"
        )
    while len(hist) < max_evals:
        pos = min(a for a, s in status.items() if s > 0)
        neg = max(a for a, s in status.items() if s < 0 and a < pos)
        unres = sorted(a for a, s in status.items() if s == 0 and neg < a < pos)
        gaps = [(neg, unres[0]), (unres[-1], pos)] if unres else [(neg, pos)]
        gaps = [gp for gp in gaps if gp[1] - gp[0] > tol]
        if not gaps:
            break
        a, b = max(gaps, key=lambda gp: gp[1] - gp[0])
        probe_at(0.5 * (a + b))
    pos = min(a for a, s in status.items() if s > 0)
    neg = max(a for a, s in status.items() if s < 0 and a < pos)
    limited = any(s == 0 and neg < a < pos for a, s in status.items())
    return AlphaMinResult(0.5 * (neg + pos), (neg, pos), limited, hist)


def ls_probe(J: float, s_values: Sequence[float]) -> list[tuple]:
    """Landau-Stuart probe points at fixed J with sqrt(2 D) / J = s."""
    return [(0.5 * (s * J) ** 2, J) for s in s_values]


def j_scan_for_ratio(s_values: Sequence[float]):
    """Scan function giving J = sqrt(2 D) / s (increasing J) for each fixed D."""
    s_sorted = sorted(s_values, reverse=True)
    return lambda d: [math.sqrt(2.0 * d) / s for s in s_sorted]


# -- model comparison --------------------------------------------------------


@dataclasses.dataclass
class ComparisonReport:
    alpha: float
    rows: list  # one per (D_ext, J): laser and matched Landau-Stuart estimates
    discrepancies: list  # rows where both signs are resolved and differ
    uplifts: dict  # J -> number of disjoint positive intervals along D_ext (laser)

    @property
    def n_discrepancies(self) -> int:
        return len(self.discrepancies)


def positive_intervals(signs: Sequence[int]) -> int:
    """Number of maximal runs of +1 in a sign sequence (0 entries break nothing)."""
    runs = 0
    inside = False
    for s in signs:
        if s > 0 and not inside:
            runs += 1
            inside = True
        elif s < 0:
            inside = False
    return runs


def compare_models(
    alpha: float,
    j_values: Sequence[float],
    d_values: Sequence[float],
    laser_settings: LyapunovSettings = LyapunovSettings(),
    ls_settings: LyapunovSettings = LyapunovSettings(horizon=4000.0, relative=True),
    uplift_j: Sequence[float] = (),
    uplift_d: Sequence[float] | None = None,
    base_seed: int = 0,
    workers: int = 1,
    gamma: float = 500.0,
    g: float = 2.765,
) -> ComparisonReport:
    """Laser versus Landau-Stuart lambda_max signs on matched grids.

    A laser point (D_ext, J) is paired with the Landau-Stuart point
    (D_ext / (g gamma), J), i.e. sqrt(2 D_ext / (g gamma)) is the matched
    forcing amplitude in rescaled time.  Lambda values keep their own time
    units; only signs are compared.  ``uplift_j`` lists small-J laser slices
    scanned along ``uplift_d`` to count disjoint positive-lambda intervals.
    """
    gg = g * gamma
    pairs = [(float(d), float(j)) for j in j_values for d in d_values]
    laser = sweep_lambda(
        SweepGrid("laser", (alpha,), _increasing(sorted(set(d for d, _ in pairs)), "d"),
                  _increasing(sorted(set(j for _, j in pairs)), "J"), laser_settings, base_seed, gamma, g),
        workers=workers,
    )
    ls = sweep_lambda(
        SweepGrid("landau_stuart", (alpha,), tuple(sorted(set(d / gg for d, _ in pairs))),
                  _increasing(sorted(set(j for _, j in pairs)), "J"), ls_settings, base_seed, gamma, g),
        workers=workers,
    )
    lmap = {(r["d_ext"], r["J"]): r for r in laser.rows}
    smap = {(r["d_ext"], r["J"]): r for r in ls.rows}
    rows, disc = [], []
    for d, j in pairs:
        a = lmap[(d, j)]
        b = smap[(d / gg, j)]
        row = {
            "alpha": alpha, "d_ext": d, "J": j, "d_ls": d / gg,
            "lambda_laser": a["lambda_max"], "stderr_laser": a["stderr"], "sign_laser": a["sign"],
            "lambda_ls": b["lambda_max"], "stderr_ls": b["stderr"], "sign_ls": b["sign"],
        }
        row["discrepancy"] = bool(a["sign"] and b["sign"] and a["sign"] != b["sign"])
        rows.append(row)
        if row["discrepancy"]:
            disc.append(row)
    uplifts = {}
    if uplift_j:
        ud = tuple(uplift_d) if uplift_d is not None else tuple(d_values)
        up = sweep_lambda(SweepGrid("laser", (alpha,), ud, _increasing(uplift_j, "J"), laser_settings, base_seed,
                                    gamma, g), workers=workers)
        sg = up.sign_array()[0]
        for ij, j in enumerate(up.grid.J):
            uplifts[j] = positive_intervals(sg[:, ij])
    return ComparisonReport(alpha, rows, disc, uplifts)


def has_positive_region(result: SweepResult, alpha_index: int = 0) -> bool:
    return bool((result.sign_array()[alpha_index] > 0).any())


def contiguous_positive_between_negatives(signs: Sequence[int]) -> bool:
    """True if a run of resolved positives is flanked by resolved negatives on both sides."""
    s = list(signs)
    pos = [i for i, v in enumerate(s) if v > 0]
    if not pos:
        return False
    first, last = pos[0], pos[-1]
    # every resolved point between first and last positive must be positive
    if any(v < 0 for v in s[first : last + 1]):
        return False
    return any(v < 0 for v in s[:first]) and any(v < 0 for v in s[last + 1 :])


def write_locus_csv(locus: BifurcationLocus, path) -> None:
    write_table_csv(locus.rows(), path, LOCUS_COLUMNS)
