"""Command line entry point: run, resume, list-presets, validate-config.

Exit codes: 0 ok, 1 runtime failure, 2 config error, 3 checkpoint mismatch.
"""

from __future__ import annotations

import argparse
import copy
import sys
from pathlib import Path

from .bifurcation import CheckpointMismatch
from .experiments import (
    KINDS,
    OUTPUT_ROOT_ENV,
    PRESET_NOTES,
    PRESETS,
    SCHEMA,
    ConfigError,
    ExperimentConfig,
    load_config,
    preset_config,
    resolve_output_dir,
    resume_checkpoint,
    run_experiment,
)
from .models import BlowUpError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_CHECKPOINT = 3

# quick overrides: flag -> section field
OVERRIDES = {"model": "model", "j": "J", "alpha": "alpha", "d_ext": "d_ext"}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noisesync", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run an experiment from a preset or config file")
    r.add_argument("kind", nargs="?", choices=KINDS, help="experiment kind (optional with --config/--preset)")
    r.add_argument("--preset", help="shipped preset name")
    r.add_argument("--config", help="YAML or JSON config file")
    r.add_argument("--out", help=f"output directory (default ${OUTPUT_ROOT_ENV}/<name>)")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--model", choices=("laser", "landau_stuart", "both"))
    r.add_argument("--j", type=float, help="pump J")
    r.add_argument("--alpha", type=float)
    r.add_argument("--d-ext", dest="d_ext", type=float)
    r.add_argument("--max-jobs", type=int, default=None, help=argparse.SUPPRESS)

    s = sub.add_parser("resume", help="continue an interrupted sweep from its checkpoint")
    s.add_argument("checkpoint")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--max-jobs", type=int, default=None, help=argparse.SUPPRESS)

    sub.add_parser("list-presets", help="list shipped presets")

    v = sub.add_parser("validate-config", help="check a config file without running it")
    v.add_argument("config")
    return ap


def _apply_overrides(d: dict, args) -> dict:
    d = copy.deepcopy(d)
    kind = d["kind"]
    sec = d.setdefault(kind, {})
    schema = SCHEMA[kind]
    for flag, field in OVERRIDES.items():
        val = getattr(args, flag, None)
        if val is None:
            continue
        if kind == "floquet" and field == "J":
            field = "j"
        if field not in schema:
            raise ConfigError(f"--{flag.replace('_', '-')} does not apply to {kind} experiments")
        sec[field] = [val] if schema[field][0] in ("floats", "axis") else val
    if args.seed is not None:
        d["seed"] = args.seed
    return d


def _build_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset_config(args.preset)
    elif args.kind:
        cfg = ExperimentConfig.from_dict({"kind": args.kind})
    else:
        raise ConfigError("nothing to run: give a kind, --preset or --config")
    if args.kind and args.kind != cfg.kind:
        raise ConfigError(f"kind {args.kind!r} does not match config kind {cfg.kind!r}")
    d = _apply_overrides(cfg.to_dict(), args)
    return ExperimentConfig.from_dict(d)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "list-presets":
            for name in PRESETS:
                print(f"{name:10s} {PRESETS[name]['kind']:18s} {PRESET_NOTES.get(name, '')}")
            return EXIT_OK
        if args.verb == "validate-config":
            cfg = load_config(args.config)
            print(f"ok: {cfg.kind} config, digest {cfg.digest()[:12]}")
            return EXIT_OK
        if args.verb == "resume":
            if not Path(args.checkpoint).exists():
                print(f"error: no checkpoint at {args.checkpoint}", file=sys.stderr)
                return EXIT_CHECKPOINT
            res = resume_checkpoint(args.checkpoint, args.workers, max_jobs=args.max_jobs)
            print(f"output: {res.out_dir}")
            return EXIT_OK
        cfg = _build_config(args)
        out = resolve_output_dir(cfg, args.out)
        kw = {"max_jobs": args.max_jobs} if cfg.kind == "bifurcation-sweep" else {}
        res = run_experiment(cfg, out, args.workers, **kw)
        print(f"output: {res.out_dir}")
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointMismatch as e:
        print(f"checkpoint error: {e}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (BlowUpError, RuntimeError, ValueError, OSError) as e:
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
