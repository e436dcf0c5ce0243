"""Command-line entry point.

Every subcommand reads an optional INI config (``--config``), applies flag
overrides, writes CSV/JSON under the output directory and finishes with a
``manifest.json``.  Errors are reported as one JSON object on stderr with a
non-zero exit code.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..dynamics import sample_attractor
from ..observation import add_noise, generate_series
from ..pipeline import GuessError
from .config import ConfigError, ExperimentConfig, default_config, load_config
from .ensemble import NOISE, PIPELINE, TRUTH, model_stats, run_ensemble, run_one, stage_rng, stage_seed
from . import experiments as ex
from .manifest import write_json, write_manifest

__all__ = ["parse_range", "parse_floats", "build_parser", "main"]

def parse_range(text: str) -> list[int]:
    """``"5:50:5"`` (inclusive), ``"1:5"`` or ``"20,25,30"`` into a list of ints."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step <= 0 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}; use a:b[:step] or a,b,c") from None
    if not values:
        raise argparse.ArgumentTypeError("empty range")
    return values


def parse_floats(text: str) -> list[float]:
    try:
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="INI experiment config")
    p.add_argument("--system", choices=("lorenz", "mackey_glass"), help="system when no config is given")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--runs", type=int, help="ensemble size")
    p.add_argument("--workers", type=int)
    p.add_argument("--noise", type=float, help="noise ratio sigma_n/sigma_y")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="microinit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _common(p)
        return p

    p = add("simulate", "integrate the model from an attractor point")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--stride", type=int, default=1)
    p = add("observe", "generate an observation series (clean and noisy)")
    p.add_argument("--T", type=int)
    p.add_argument("--m", type=int)
    p = add("initialize", "initialize one run and write its record")
    p.add_argument("--run-id", type=int, default=0)
    p.add_argument("--noisy", action="store_true")
    p = add("ensemble", "run an ensemble; write profiles, summary and records")
    p.add_argument("--series", choices=("both", "noiseless", "noisy"), default="both")
    p = add("horizon", "k_max against the number of observations")
    p.add_argument("--T", type=parse_range, default=[5, 10, 20, 30, 40, 50])
    p = add("nse0", "initialized model-space discrepancy against T")
    p.add_argument("--T", type=parse_range, default=[5, 10, 20, 30, 40, 50])
    p = add("heatmap", "noiseless (T, m) grid of the initialized discrepancy")
    p.add_argument("--T", type=parse_range, default=parse_range("5:50:5"))
    p.add_argument("--m", type=parse_range, default=parse_range("1:5"))
    p = add("spectrum", "average normalized power spectrum")
    p.add_argument("--points", type=int, default=4096)
    p = add("lyapunov", "largest Lyapunov exponent and ten-fold time")
    p.add_argument("--steps", type=int, default=200_000)
    p = add("linear-study", "exact recovery grid for random time-varying linear systems")
    p.add_argument("--nx", type=int, default=6)
    p.add_argument("--T", type=parse_range, default=parse_range("1:8"))
    p.add_argument("--m", type=parse_range, default=parse_range("1:4"))
    p.add_argument("--draws", type=int, default=20)
    p.add_argument("--reduced", action="store_true", help="use one row per observation")
    p = add("optim-compare", "NSE0 per optimizer variant")
    p.add_argument("--variants", default="sgd,adadelta,adam,amsgrad,yamadam")
    p = add("filter-study", "filtered-noise histograms per number of passes")
    p.add_argument("--q", type=parse_range, default=[0, 1, 2, 4, 8, 16, 50, 100])
    p.add_argument("--length", type=int, default=50_000)
    p = add("bounding-sweep", "rough against refined discrepancy over delta_R")
    p.add_argument("--delta", type=parse_floats, default=[0.02, 0.05, 0.1, 0.2, 0.4])
    p.add_argument("--noiseless", action="store_true")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else default_config(args.system or "lorenz")
    if args.config and args.system and args.system != cfg.system:
        raise ConfigError("--system conflicts with the config file")
    changes = {}
    for flag, key in (("seed", "seed"), ("runs", "ensemble_size"), ("workers", "workers"),
                      ("noise", "noise_ratio"), ("output_dir", "output_dir")):
        v = getattr(args, flag, None)
        if v is not None:
            changes[key] = str(v) if key == "output_dir" else v
    if args.command == "observe":
        changes.update({k: getattr(args, k) for k in ("T", "m") if getattr(args, k) is not None})
    return cfg.replace(**changes) if changes else cfg


def _run(args) -> tuple[ExperimentConfig, list, dict]:
    cfg = _config(args)
    out = Path(cfg.output_dir)
    cmd = args.command
    seeds = {"master": cfg.seed}
    files = []

    if cmd == "simulate":
        model = cfg.build_model()
        x = sample_attractor(model, stage_rng(cfg.seed, 0, TRUTH))
        states = model.run(x, args.steps, args.stride)[0]
        rows = [(i * args.stride, *s) for i, s in enumerate(states)]
        header = ("step", *[f"x{i}" for i in range(model.dim)])
        files.append(ex.Table("trajectory", header, rows).write(out))
    elif cmd == "observe":
        model = cfg.build_model()
        x = sample_attractor(model, stage_rng(cfg.seed, 0, TRUTH))
        clean = generate_series(model, cfg.op, x, cfg.T, cfg.m)
        noisy = add_noise(clean, cfg.noise_ratio, stage_rng(cfg.seed, 0, NOISE), cfg.noise)
        rows = list(zip(range(-cfg.T, 1), clean.values, noisy.values))
        files.append(ex.Table("observations", ("k", "clean", "noisy"), rows).write(out))
    elif cmd == "initialize":
        rec = run_one(cfg, args.run_id, args.noisy, model_stats(cfg))
        doc = rec.summary()
        if rec.ok:
            doc.update(nse_obs=rec.nse_obs.tolist(), nse_mod=rec.nse_mod.tolist())
        seeds.update(run_id=args.run_id, pipeline=stage_seed(cfg.seed, args.run_id, PIPELINE))
        files.append(write_json(out / "initialize.json", doc))
    elif cmd == "ensemble":
        flags = {"both": (False, True), "noiseless": (False,), "noisy": (True,)}[args.series]
        results = run_ensemble(cfg, flags)
        files.append(ex.error_profile(cfg, results=results).write(out))
        files.append(ex.ensemble_summary(results).write(out))
        files.append(write_json(out / "records.json", ex.record_table(results)))
    elif cmd == "horizon":
        files.append(ex.horizon_vs_T(cfg, args.T).write(out))
    elif cmd == "nse0":
        files.append(ex.nse0_vs_T(cfg, args.T).write(out))
    elif cmd == "heatmap":
        files.append(ex.heatmap(cfg, args.T, args.m).write(out))
    elif cmd == "spectrum":
        files.append(ex.spectrum(cfg, cfg.ensemble_size, args.points).write(out))
    elif cmd == "lyapunov":
        files.append(ex.lyapunov(cfg, args.steps).write(out))
    elif cmd == "linear-study":
        table = ex.linear_study(cfg.seed, args.nx, args.T, args.m, args.draws, not args.reduced)
        files.append(table.write(out))
    elif cmd == "optim-compare":
        variants = [v.strip() for v in args.variants.split(",") if v.strip()]
        files.append(ex.optimizer_comparison(cfg, variants).write(out))
    elif cmd == "filter-study":
        hist, moments = ex.filter_noise(cfg, args.q, args.length)
        files += [hist.write(out), moments.write(out)]
    elif cmd == "bounding-sweep":
        files.append(ex.bounding_sweep(cfg, args.delta, noisy=not args.noiseless).write(out))
    else:  # pragma: no cover - argparse enforces the choices
        raise ConfigError(f"unknown command {cmd!r}")
    if cmd not in ("simulate", "observe", "initialize", "spectrum", "lyapunov", "filter-study",
                   "linear-study"):
        seeds["runs"] = list(range(cfg.ensemble_size))
    return cfg, files, seeds


def main(argv: list | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, files, seeds = _run(args)
        manifest = write_manifest(cfg.output_dir, args.command, argv, cfg, files, seeds)
    except (ConfigError, GuessError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    for f in files:
        print(f)
    print(manifest)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
