"""Experiment configs, shipped presets and the runners behind the CLI.

A config is a nested mapping (YAML or JSON) with a ``kind`` and one section
named after that kind.  Validation reports the offending field path and, for
YAML input, its line number.  Every run writes numeric artifacts (CSV/JSON)
plus ``manifest.json`` holding the resolved config, seeds, version and wall
time; only the manifest carries timing, so numeric artifacts of a rerun are
bitwise identical.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
import os
import subprocess
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bifurcation import (
    LyapunovSettings,
    SweepGrid,
    load_checkpoint,
    sweep_lambda,
    write_table_csv,
)
from .ensemble import EnsembleConfig, run_ensemble
from .kicks import KickSchedule, circle_set, count_folds, evolve_kicked_set, phase_difference_experiment, winding_number
from .lyapunov import estimate_lambda_max, floquet_spectrum_numeric
from .models import BlowUpError, LandauStuartParams, LaserParams, floquet_closed_form, regime_boundaries
from .noise import NoiseSpec
from .pullback import PullbackConfig, classify_attractor, pullback_snapshot, summary_dict

OUTPUT_ROOT_ENV = "NOISESYNC_OUTPUT_ROOT"
KINDS = ("floquet", "lyapunov", "pullback", "bifurcation-sweep", "ensemble", "kicks")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


# -- schema ------------------------------------------------------------------
# Each section is described by {field: (type, default)}; type is one of
# float, int, str, bool, "axis" (list of floats or {log|lin: [lo, hi, n]}),
# "floats", "pairs", or a tuple of allowed strings.

_MODEL = ("laser", "landau_stuart")

SCHEMA = {
    "floquet": {
        "model": (("laser", "landau_stuart", "both"), "both"),
        "j": ("axis", [1.0]),
        "alpha": (float, 0.0),
        "numeric": (bool, False),
    },
    "lyapunov": {
        "model": (_MODEL, "laser"),
        "J": (float, 1.0),
        "alpha": (float, 3.0),
        "Delta": (float, 0.0),
        "d_ext": (float, 0.1),
        "horizon": (float, 200.0),
        "burn_in": (float, -1.0),  # < 0: twenty relaxation times
        "dt": (float, -1.0),  # < 0: model default
        "n_blocks": (int, 20),
        "renorm_interval": (int, 10),
        "n_seeds": (int, 1),
    },
    "pullback": {
        "model": (_MODEL, "laser"),
        "J": (float, 1.0),
        "alpha": (float, 3.0),
        "d_ext": ("floats", [0.1]),
        "t_snapshot": (float, 30.0),
        "t0_list": ("floats", [29.0, 28.0, 0.0]),
        "n_points": (int, 2500),
        "dt": (float, 1e-4),
        "lyapunov_horizon": (float, 200.0),
        "write_points": (bool, True),
    },
    "bifurcation-sweep": {
        "model": (_MODEL, "laser"),
        "alpha": ("axis", [0.0]),
        "d_ext": ("axis", {"log": [1e-3, 1e3, 12]}),
        "J": ("axis", {"log": [1e-4, 10.0, 12]}),
        "horizon": (float, 100.0),
        "burn_in": (float, -1.0),
        "dt": (float, -1.0),
        "n_blocks": (int, 20),
        "renorm_interval": (int, 10),
        "relative": (bool, False),
        "k_sigma": (float, 2.0),
    },
    "ensemble": {
        "J": (float, 5.0),
        "alpha": ("floats", [0.0, 3.0]),
        "m": (int, 50),
        "forcing": (("none", "monochromatic", "white_noise"), "white_noise"),
        "strengths": ("axis", [0.1]),
        "d_e": (float, 0.05),
        "d_n": (float, 3.5e-8),
        "horizon": (float, 250.0),  # total span including burn-in
        "burn_in": (float, 50.0),
        "dt": (float, 1e-4),
        "sample_every": (int, 100),
        "bins": (int, 40),
    },
    "kicks": {
        "protocol": (("folds", "phase_difference"), "folds"),
        "alpha": ("floats", [0.0, 2.0]),
        "J": (float, 1.0),
        "n_points": (int, 15000),
        "amplitude": (float, 0.8),
        "angular_wavenumber": (int, 4),
        "times": ("floats", [0.0, 0.25, 0.5, 0.75]),
        "snapshot_times": ("floats", [0.0, 0.35, 0.8, 1.0]),
        "t_end": (float, 1.0),
        "dt": (float, 1e-4),
        "write_points": (bool, True),
    },
}

TOP_LEVEL = {
    "kind": (KINDS, None),
    "seed": (int, 0),
    "workers": (int, 0),  # 0: logical cores
    "output_dir": (str, ""),
    "name": (str, ""),
}


def _loc(lines: dict, path: str) -> str:
    ln = lines.get(path)
    return f"line {ln}: " if ln else ""


def _coerce(value, typ, path, lines):
    where = _loc(lines, path)
    if isinstance(typ, tuple):
        if value not in typ:
            raise ConfigError(f"{where}{path}: {value!r} is not one of {list(typ)}")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}{path}: expected true/false, got {value!r}")
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}{path}: expected an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{where}{path}: expected a finite number, got {value!r}")
        return float(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}{path}: expected a string, got {value!r}")
        return value
    if typ == "floats":
        if not isinstance(value, list):
            value = [value]
        return [_coerce(v, float, f"{path}[{i}]", lines) for i, v in enumerate(value)]
    if typ == "axis":
        return expand_axis(value, path, lines)
    raise AssertionError(typ)


def expand_axis(value, path="axis", lines=None) -> list:
    """A list of numbers, or {log: [lo, hi, n]} / {lin: [lo, hi, n]}."""
    lines = lines or {}
    where = _loc(lines, path)
    if isinstance(value, dict):
        if len(value) != 1 or next(iter(value)) not in ("log", "lin"):
            raise ConfigError(f"{where}{path}: axis mapping must have a single key 'log' or 'lin'")
        key, spec = next(iter(value.items()))
        if not (isinstance(spec, list) and len(spec) == 3):
            raise ConfigError(f"{where}{path}.{key}: expected [lo, hi, n]")
        lo = _coerce(spec[0], float, f"{path}.{key}[0]", lines)
        hi = _coerce(spec[1], float, f"{path}.{key}[1]", lines)
        n = _coerce(spec[2], int, f"{path}.{key}[2]", lines)
        if n < 0 or hi < lo:
            raise ConfigError(f"{where}{path}.{key}: need n >= 0 and hi >= lo")
        if key == "log":
            if lo <= 0:
                raise ConfigError(f"{where}{path}.log: bounds must be > 0")
            return [float(x) for x in np.geomspace(lo, hi, n)] if n else []
        return [float(x) for x in np.linspace(lo, hi, n)]
    vals = _coerce(value, "floats", path, lines)
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"{where}{path}: values must be strictly increasing")
    return vals


def _line_map(text: str) -> dict:
    """Field path -> 1-based line number for a YAML document."""
    out = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = f"{prefix}.{k.value}" if prefix else str(k.value)
                out[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                out[f"{prefix}[{i}]"] = v.start_mark.line + 1
                walk(v, f"{prefix}[{i}]")

    walk(root, "")
    return out


@dataclasses.dataclass
class ExperimentConfig:
    kind: str
    section: dict
    seed: int = 0
    workers: int = 0
    output_dir: str = ""
    name: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "workers": self.workers,
            "output_dir": self.output_dir,
            "name": self.name,
            self.kind: copy.deepcopy(self.section),
        }

    @classmethod
    def from_dict(cls, d, lines: dict | None = None) -> "ExperimentConfig":
        lines = lines or {}
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping at the top level")
        kind = d.get("kind")
        if kind is None:
            raise ConfigError("kind: missing (one of " + ", ".join(KINDS) + ")")
        kind = _coerce(kind, KINDS, "kind", lines)
        top = {}
        for key, val in d.items():
            if key == kind:
                continue
            if key not in TOP_LEVEL:
                raise ConfigError(f"{_loc(lines, str(key))}{key}: unknown field")
            if key != "kind":
                top[key] = _coerce(val, TOP_LEVEL[key][0], key, lines)
        raw = d.get(kind, {}) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{_loc(lines, kind)}{kind}: expected a mapping")
        schema = SCHEMA[kind]
        section = {}
        for key, val in raw.items():
            if key not in schema:
                raise ConfigError(f"{_loc(lines, f'{kind}.{key}')}{kind}.{key}: unknown field")
            section[key] = _coerce(val, schema[key][0], f"{kind}.{key}", lines)
        for key, (typ, default) in schema.items():
            if key not in section:
                section[key] = _coerce(copy.deepcopy(default), typ, f"{kind}.{key}", lines)
        cfg = cls(kind=kind, section=section, **top)
        _check_semantics(cfg, lines)
        return cfg

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _check_semantics(cfg: ExperimentConfig, lines: dict) -> None:
    s = cfg.section
    k = cfg.kind

    def bad(field, msg):
        raise ConfigError(f"{_loc(lines, f'{k}.{field}')}{k}.{field}: {msg}")

    if cfg.workers < 0:
        raise ConfigError(f"{_loc(lines, 'workers')}workers: must be >= 0")
    for f in ("horizon", "t_snapshot", "lyapunov_horizon", "t_end"):
        if f in s and not s[f] > 0:
            bad(f, "must be > 0")
    for f in ("dt",):
        if f in s and s[f] == 0:
            bad(f, "must be nonzero")
    if k == "floquet" and any(j <= 0 for j in s["j"]):
        bad("j", "pump values must be > 0")
    if k in ("lyapunov", "pullback") and not s["J"] > 0:
        bad("J", "must be > 0")
    if k == "lyapunov" and s["d_ext"] < 0:
        bad("d_ext", "must be >= 0")
    if k == "pullback":
        if any(d < 0 for d in s["d_ext"]):
            bad("d_ext", "must be >= 0")
        if any(t0 >= s["t_snapshot"] for t0 in s["t0_list"]):
            bad("t0_list", "every t0 must be earlier than t_snapshot")
        if s["n_points"] < 2:
            bad("n_points", "must be >= 2")
    if k == "bifurcation-sweep":
        if any(d <= 0 for d in s["d_ext"]):
            bad("d_ext", "values must be > 0")
        if any(j <= 0 for j in s["J"]):
            bad("J", "values must be > 0")
    if k == "ensemble":
        if s["m"] < 1:
            bad("m", "must be >= 1")
        if any(v < 0 for v in s["strengths"]):
            bad("strengths", "must be >= 0")
        if not s["horizon"] > s["burn_in"] >= 0:
            bad("burn_in", "need horizon > burn_in >= 0")
    if k == "kicks" and s["n_points"] < 3:
        bad("n_points", "must be >= 3")


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML or JSON config file."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {e.lineno}: invalid JSON: {e.msg}") from None
        return ExperimentConfig.from_dict(data)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{where}invalid YAML: {getattr(e, 'problem', e)}") from None
    return ExperimentConfig.from_dict(data, _line_map(text))


# -- presets -----------------------------------------------------------------

_LS_REL = {"relative": True, "horizon": 20000.0, "dt": 0.01}

PRESETS = {
    "fig2a": {"kind": "ensemble", "ensemble": {
        "forcing": "monochromatic", "J": 5.0, "alpha": [0.0, 3.0],
        "strengths": {"log": [1e-4, 1e3, 8]}, "horizon": 30.0, "burn_in": 10.0}},
    "fig2b": {"kind": "ensemble", "ensemble": {
        "forcing": "white_noise", "J": 5.0, "alpha": [0.0, 3.0],
        "strengths": {"log": [1e-4, 1e3, 8]}, "horizon": 30.0, "burn_in": 10.0}},
    "fig3": {"kind": "ensemble", "ensemble": {
        "forcing": "white_noise", "J": 5.0, "alpha": [0.0, 3.0],
        "strengths": [1.0, 10.0, 1000.0], "horizon": 30.0, "burn_in": 10.0, "bins": 40}},
    "fig4a": {"kind": "bifurcation-sweep", "bifurcation-sweep": {
        "model": "laser", "alpha": [0.0], "d_ext": {"log": [1e-3, 1e3, 12]},
        "J": {"log": [1e-4, 10.0, 12]}, "horizon": 100.0}},
    "fig4b": {"kind": "bifurcation-sweep", "bifurcation-sweep": {
        "model": "laser", "alpha": [3.0], "d_ext": {"log": [1e-3, 1e3, 12]},
        "J": {"log": [1e-4, 10.0, 12]}, "horizon": 100.0}},
    "fig5": {"kind": "pullback", "pullback": {"model": "laser", "J": 1.0, "alpha": 3.0, "d_ext": [0.1, 0.5]}},
    "fig5-sink": {"kind": "pullback", "pullback": {"model": "laser", "J": 1.0, "alpha": 3.0, "d_ext": [0.1]}},
    "fig5-rsa": {"kind": "pullback", "pullback": {"model": "laser", "J": 1.0, "alpha": 3.0, "d_ext": [0.5]}},
    "fig6a": {"kind": "bifurcation-sweep", "bifurcation-sweep": dict(
        model="landau_stuart", alpha=[6.0], d_ext={"log": [1e-6, 1e-1, 12]}, J={"log": [1e-4, 1.0, 12]}, **_LS_REL)},
    "fig6b": {"kind": "bifurcation-sweep", "bifurcation-sweep": dict(
        model="landau_stuart", alpha=[4.0, 5.0, 6.0, 7.0, 8.0, 10.0], d_ext={"log": [1e-3, 10.0, 12]}, J=[1.0],
        **_LS_REL)},
    "fig6c": {"kind": "bifurcation-sweep", "bifurcation-sweep": {
        "model": "laser", "alpha": [3.0], "d_ext": {"log": [1e-2, 1e3, 12]}, "J": {"log": [1e-3, 10.0, 12]},
        "horizon": 100.0}},
    "fig6d": {"kind": "bifurcation-sweep", "bifurcation-sweep": {
        "model": "laser", "alpha": [0.0, 1.0, 2.0, 3.0, 4.0, 6.0], "d_ext": {"log": [1e-2, 1e3, 12]}, "J": [1.0],
        "horizon": 100.0}},
    "fig7": {"kind": "floquet", "floquet": {"model": "both", "j": {"log": [1e-6, 1e4, 41]}}},
    "fig9": {"kind": "kicks", "kicks": {"protocol": "folds", "alpha": [0.0, 2.0]}},
    "fig10": {"kind": "kicks", "kicks": {"protocol": "phase_difference", "alpha": [0.0, 3.0], "J": 1.0}},
}

PRESET_NOTES = {
    "fig2a": "order parameter vs monochromatic forcing strength, M=50, J=5",
    "fig2b": "order parameter vs white-noise strength, M=50, J=5",
    "fig3": "I_M histograms at D_ext = 1, 10, 1000",
    "fig4a": "laser lambda_max on a 12x12 (D_ext, J) log grid, alpha=0",
    "fig4b": "laser lambda_max on a 12x12 (D_ext, J) log grid, alpha=3",
    "fig5": "pullback snapshots, laser alpha=3 J=1, D_ext=0.1 and 0.5",
    "fig5-sink": "pullback snapshots at D_ext=0.1 (random sink)",
    "fig5-rsa": "pullback snapshots at D_ext=0.5 (random strange attractor)",
    "fig6a": "Landau-Stuart lambda_max in the (D_ext, J) plane, alpha=6",
    "fig6b": "Landau-Stuart lambda_max in the (D_ext, alpha) plane, J=1",
    "fig6c": "laser lambda_max in the (D_ext, J) plane, alpha=3",
    "fig6d": "laser lambda_max in the (D_ext, alpha) plane, J=1",
    "fig7": "relaxation exponents versus J for both models",
    "fig9": "kicked cycle images, alpha=0 and alpha=2",
    "fig10": "phase difference of two trajectories, laser and Landau-Stuart",
}


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; see list-presets")
    d = copy.deepcopy(PRESETS[name])
    d["name"] = name
    return ExperimentConfig.from_dict(d)


# -- artifacts ---------------------------------------------------------------


def version_string() -> str:
    """git describe of the source tree when available, else the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"], cwd=here, capture_output=True, text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def resolve_output_dir(cfg: ExperimentConfig, override: str | None = None) -> Path:
    if override:
        return Path(override)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
    return Path(root) / (cfg.name or cfg.kind)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write_rows(path: Path, columns, rows) -> None:
    write_table_csv(rows, path, columns)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, cfg: ExperimentConfig, artifacts, seeds, wall: float, extra=None) -> None:
    m = {
        "config": cfg.to_dict(),
        "config_digest": cfg.digest(),
        "seeds": seeds,
        "version": version_string(),
        "wall_time_s": wall,
        "artifacts": {Path(a).name: sha256_file(a) for a in artifacts},
    }
    if extra:
        m.update(extra)
    _write_json(out / "manifest.json", m)


@dataclasses.dataclass
class RunResult:
    out_dir: Path
    artifacts: list
    summary: dict
    complete: bool = True


# -- runners -----------------------------------------------------------------


def _fmt_c(z: complex) -> str:
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real:.6g} {sign} {abs(z.imag):.6g}i"


def run_floquet(cfg, out: Path, workers: int, log=print) -> RunResult:
    s = cfg.section
    rows = []
    models = ["laser", "landau_stuart"] if s["model"] == "both" else [s["model"]]
    for J in s["j"]:
        for m in models:
            p = LaserParams(J=J, alpha=s["alpha"]) if m == "laser" else LandauStuartParams(J=J, alpha=s["alpha"])
            f = floquet_closed_form(p)
            mu3 = f.mu3 if f.mu3 is not None else complex("nan")
            row = {
                "model": m, "J": J, "regime": f.regime,
                "mu1": f.mu1, "mu2_re": f.mu2.real, "mu2_im": f.mu2.imag,
                "mu3_re": mu3.real, "mu3_im": mu3.imag,
            }
            if s["numeric"]:
                num = floquet_spectrum_numeric(p)
                row.update(num_mu2_re=num.mu2.real, num_mu2_im=num.mu2.imag,
                           num_mu3_re=(num.mu3 or complex("nan")).real, num_mu3_im=(num.mu3 or complex("nan")).imag)
            rows.append(row)
            if len(s["j"]) == 1:
                log(f"{m} J={J:g} ({f.regime})")
                log(f"  mu1 = {f.mu1:g}")
                log(f"  mu2 = {_fmt_c(f.mu2)}")
                if f.mu3 is not None:
                    log(f"  mu3 = {_fmt_c(f.mu3)}")
    cols = ["model", "J", "regime", "mu1", "mu2_re", "mu2_im", "mu3_re", "mu3_im"]
    if s["numeric"]:
        cols += ["num_mu2_re", "num_mu2_im", "num_mu3_re", "num_mu3_im"]
    path = out / "floquet.csv"
    _write_rows(path, cols, rows)
    lo, hi = regime_boundaries()
    summ = {"regime_boundaries": [lo, hi]}
    _write_json(out / "summary.json", summ)
    return RunResult(out, [path, out / "summary.json"], summ)


def _lyap_kwargs(s):
    kw = {"n_blocks": s["n_blocks"], "renorm_interval": s["renorm_interval"]}
    if s["burn_in"] >= 0:
        kw["burn_in"] = s["burn_in"]
    return kw


def run_lyapunov(cfg, out: Path, workers: int, log=print) -> RunResult:
    s = cfg.section
    p = (LaserParams(J=s["J"], alpha=s["alpha"], Delta=s["Delta"]) if s["model"] == "laser"
         else LandauStuartParams(J=s["J"], alpha=s["alpha"], DeltaTilde=s["Delta"]))
    dt = s["dt"] if s["dt"] > 0 else (1e-4 if s["model"] == "laser" else 1e-2)
    rows = []
    for i in range(s["n_seeds"]):
        seed = cfg.seed + i
        est = estimate_lambda_max(p, NoiseSpec(d_ext=s["d_ext"], seed=seed, dt_grid=dt), s["horizon"], dt=dt,
                                  ic_seed=seed, **_lyap_kwargs(s))
        rows.append({"seed": seed, "lambda_max": est.lambda_max, "stderr": est.stderr, "sign": est.sign(),
                     "t_total": est.t_total, "n_renorm": est.n_renorm, "mean_intensity": float(est.mean_intensity)})
        log(f"seed {seed}: lambda_max = {est.lambda_max:.6g} +/- {est.stderr:.2g}")
    path = out / "lyapunov.csv"
    _write_rows(path, list(rows[0]), rows)
    lam = np.array([r["lambda_max"] for r in rows])
    summ = {"mean_lambda": float(lam.mean()), "n_seeds": len(rows)}
    _write_json(out / "summary.json", summ)
    return RunResult(out, [path, out / "summary.json"], summ)


def run_pullback(cfg, out: Path, workers: int, log=print) -> RunResult:
    s = cfg.section
    p = LaserParams(J=s["J"], alpha=s["alpha"]) if s["model"] == "laser" else LandauStuartParams(J=s["J"], alpha=s["alpha"])
    arts = []
    cases = []
    for d in s["d_ext"]:
        spec = NoiseSpec(d_ext=d, seed=cfg.seed, dt_grid=s["dt"])
        pcfg = PullbackConfig(t_snapshot=s["t_snapshot"], t0_list=tuple(s["t0_list"]), n_points=s["n_points"],
                              dt=s["dt"])
        snaps = pullback_snapshot(p, spec, pcfg)
        est = estimate_lambda_max(p, spec, s["lyapunov_horizon"], dt=s["dt"], ic_seed=cfg.seed)
        cls = classify_attractor(snaps, est)
        if s["write_points"]:
            for sn in snaps:
                path = out / f"snapshot_d{d:g}_t0_{sn.t0:g}.csv"
                _write_rows(path, ["e_re", "e_im", "n"],
                            [{"e_re": float(a), "e_im": float(b), "n": float(c)} for a, b, c in sn.points])
                arts.append(path)
        cases.append({"d_ext": d, "lambda_max": est.lambda_max, "stderr": est.stderr, "classification": cls,
                      "snapshots": [summary_dict(sn) for sn in snaps]})
        log(f"D_ext={d:g}: lambda_max = {est.lambda_max:.4g} +/- {est.stderr:.2g}, "
            f"diameter(t0={snaps[-1].t0:g}) = {snaps[-1].diameter:.3g} -> {cls}")
    summ = {"cases": cases}
    _write_json(out / "summary.json", summ)
    arts.append(out / "summary.json")
    return RunResult(out, arts, summ)


def sweep_grid_from_config(cfg: ExperimentConfig) -> SweepGrid:
    s = cfg.section
    settings = LyapunovSettings(
        horizon=s["horizon"],
        burn_in=s["burn_in"] if s["burn_in"] >= 0 else None,
        dt=s["dt"] if s["dt"] > 0 else None,
        n_blocks=s["n_blocks"],
        renorm_interval=s["renorm_interval"],
        relative=s["relative"],
        k_sigma=s["k_sigma"],
    )
    return SweepGrid(s["model"], tuple(s["alpha"]), tuple(s["d_ext"]), tuple(s["J"]), settings, cfg.seed)


def finish_sweep(grid: SweepGrid, out: Path, checkpoint: Path, workers: int, max_jobs=None, log=print) -> RunResult:
    res = sweep_lambda(grid, checkpoint, workers=workers, max_jobs=max_jobs)
    if not res.complete:
        log(f"sweep incomplete: {len(res.rows)}/{len(grid.jobs())} jobs in {checkpoint}")
        return RunResult(out, [checkpoint], {"done": len(res.rows), "total": len(grid.jobs())}, complete=False)
    path = out / "sweep.csv"
    write_table_csv(res.rows, path)
    sg = res.sign_array()
    n_missing = sum(1 for r in res.rows if r["status"] != "ok")
    summ = {
        "n_jobs": len(res.rows), "n_computed": res.n_computed, "n_missing": n_missing,
        "n_positive": int((sg > 0).sum()), "n_negative": int((sg < 0).sum()),
        "n_unresolved": int((sg == 0).sum()) - n_missing,
    }
    _write_json(out / "summary.json", summ)
    log(f"sweep complete: {summ}")
    return RunResult(out, [path, out / "summary.json"], summ)


def run_sweep(cfg, out: Path, workers: int, log=print, max_jobs=None) -> RunResult:
    grid = sweep_grid_from_config(cfg)
    return finish_sweep(grid, out, out / "checkpoint.json", workers, max_jobs, log)


def run_ensemble_experiment(cfg, out: Path, workers: int, log=print) -> RunResult:
    s = cfg.section
    rows, hist_rows = [], []
    for alpha in s["alpha"]:
        params = LaserParams(J=s["J"], alpha=alpha)
        for strength in s["strengths"]:
            ecfg = EnsembleConfig(
                m=s["m"], forcing=s["forcing"],
                K=strength if s["forcing"] == "monochromatic" else 0.0,
                d_ext=strength if s["forcing"] == "white_noise" else 0.0,
                d_e=s["d_e"], d_n=s["d_n"], horizon=s["horizon"], burn_in=s["burn_in"], dt=s["dt"],
                sample_every=s["sample_every"],
            )
            try:
                r = run_ensemble(params, ecfg, seed=cfg.seed, bins=s["bins"])
            except BlowUpError as e:
                rows.append({"alpha": alpha, "strength": strength, "status": f"blowup@{e.t}"})
                continue
            rows.append({"alpha": alpha, "strength": strength, "mean_im": r.mean_im, "mean_ifr": r.mean_ifr,
                         "ratio": r.ratio, "im_over_ifr": r.im_over_ifr, "sync_class": r.sync_class,
                         "status": "ok"})
            edges, mass = r.histogram
            for lo, hi, w in zip(edges[:-1], edges[1:], mass):
                hist_rows.append({"alpha": alpha, "strength": strength, "bin_lo": float(lo), "bin_hi": float(hi),
                                  "mass": float(w)})
            log(f"alpha={alpha:g} strength={strength:g}: ratio={r.ratio:.3g} ({r.sync_class})")
    p1 = out / "order_parameter.csv"
    _write_rows(p1, ["alpha", "strength", "mean_im", "mean_ifr", "ratio", "im_over_ifr", "sync_class", "status"],
                rows)
    p2 = out / "histogram.csv"
    _write_rows(p2, ["alpha", "strength", "bin_lo", "bin_hi", "mass"], hist_rows)
    summ = {"n_points": len(rows)}
    return RunResult(out, [p1, p2], summ)


def run_kicks(cfg, out: Path, workers: int, log=print) -> RunResult:
    s = cfg.section
    arts = []
    if s["protocol"] == "phase_difference":
        cases = [("laser", a) for a in s["alpha"]] + [("landau_stuart", a) for a in s["alpha"] if a != 0]
        res = phase_difference_experiment(cases=tuple(cases), J=s["J"], dt=s["dt"])
        rows, summ = [], {}
        for label, (t, diff, d0) in res.items():
            for ti, di in zip(t, diff):
                rows.append({"label": label, "t": float(ti), "diff": float(di)})
            summ[label] = {"dpsi0": d0, "final": float(diff[-1]), "max": float(diff.max()),
                           "final_error": float(abs(diff[-1] - d0))}
            log(f"{label}: final - dPsi0 = {diff[-1] - d0:.3g}, max = {diff.max():.4g}")
        path = out / "phase_difference.csv"
        _write_rows(path, ["label", "t", "diff"], rows)
        _write_json(out / "summary.json", summ)
        return RunResult(out, [path, out / "summary.json"], summ)
    sched = KickSchedule(times=tuple(s["times"]), amplitude=s["amplitude"],
                         angular_wavenumber=s["angular_wavenumber"])
    rows, summ = [], {}
    for alpha in s["alpha"]:
        p = LaserParams(J=s["J"], alpha=alpha)
        snaps = evolve_kicked_set(p, circle_set(s["J"], s["n_points"]), sched, s["t_end"], s["snapshot_times"],
                                  dt=s["dt"])
        for t in s["snapshot_times"]:
            pts = snaps[t]
            nf = count_folds(pts)
            rows.append({"alpha": alpha, "t": t, "folds": nf, "winding": winding_number(pts)})
            if s["write_points"]:
                path = out / f"kicked_alpha{alpha:g}_t{t:g}.csv"
                _write_rows(path, ["e_re", "e_im", "n"],
                            [{"e_re": float(a), "e_im": float(b), "n": float(c)} for a, b, c in pts])
                arts.append(path)
            log(f"alpha={alpha:g} t={t:g}: folds={nf}")
        summ[f"alpha{alpha:g}"] = {"clamped": snaps["clamped"]}
    path = out / "folds.csv"
    _write_rows(path, ["alpha", "t", "folds", "winding"], rows)
    _write_json(out / "summary.json", summ)
    return RunResult(out, arts + [path, out / "summary.json"], summ)


RUNNERS = {
    "floquet": run_floquet,
    "lyapunov": run_lyapunov,
    "pullback": run_pullback,
    "bifurcation-sweep": run_sweep,
    "ensemble": run_ensemble_experiment,
    "kicks": run_kicks,
}


def run_experiment(cfg: ExperimentConfig, out_dir: Path, workers: int | None = None, log=print, **kw) -> RunResult:
    """Run ``cfg`` into ``out_dir`` and write the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    w = workers if workers else (cfg.workers or os.cpu_count() or 1)
    _write_json(out_dir / "config.json", cfg.to_dict())
    t0 = time.perf_counter()
    res = RUNNERS[cfg.kind](cfg, out_dir, w, log=log, **kw)
    wall = time.perf_counter() - t0
    if res.complete:
        write_manifest(out_dir, cfg, res.artifacts + [out_dir / "config.json"], {"seed": cfg.seed}, wall)
    return res


def resume_checkpoint(checkpoint, workers: int | None = None, log=print, max_jobs=None) -> RunResult:
    """Finish an interrupted sweep next to its checkpoint."""
    checkpoint = Path(checkpoint)
    grid, _ = load_checkpoint(checkpoint)
    out = checkpoint.parent
    cfg_path = out / "config.json"
    w = workers or os.cpu_count() or 1
    t0 = time.perf_counter()
    res = finish_sweep(grid, out, checkpoint, w, max_jobs, log)
    if res.complete:
        cfg = None
        if cfg_path.exists():
            try:
                cfg = ExperimentConfig.from_dict(json.loads(cfg_path.read_text()))
            except ConfigError:
                cfg = None
        if cfg is None:
            cfg = config_from_grid(grid)
            _write_json(cfg_path, cfg.to_dict())
        write_manifest(out, cfg, res.artifacts + [cfg_path], {"seed": grid.base_seed}, time.perf_counter() - t0)
    return res


def config_from_grid(grid: SweepGrid) -> ExperimentConfig:
    st = grid.settings
    sec = {
        "model": grid.model, "alpha": list(grid.alpha), "d_ext": list(grid.d_ext), "J": list(grid.J),
        "horizon": st.horizon, "burn_in": -1.0 if st.burn_in is None else st.burn_in,
        "dt": -1.0 if st.dt is None else st.dt, "n_blocks": st.n_blocks, "renorm_interval": st.renorm_interval,
        "relative": st.relative, "k_sigma": st.k_sigma,
    }
    return ExperimentConfig.from_dict({"kind": "bifurcation-sweep", "seed": grid.base_seed,
                                       "bifurcation-sweep": sec})
