#!/usr/bin/env python3
"""Regenerate the data behind every figure and table through the CLI.

    python3 scripts/reproduce.py                 # everything, desk scale
    python3 scripts/reproduce.py horizons spectra --runs 1000 --workers 4

Each experiment writes into ``<out>/<experiment>/<system>`` with its own
manifest, so any single file can be regenerated from the recorded argv.
"""
import argparse
import sys
import time
from pathlib import Path

from microinit.harness.cli import main as cli

SYSTEMS = ("lorenz", "mackey_glass")

# experiment -> list of (system or None, argv tail)
EXPERIMENTS = {
    "horizons": [(s, ["ensemble"]) for s in SYSTEMS],
    "horizon_vs_T": [(s, ["horizon", "--T", "5,10,20,30,40,50"]) for s in SYSTEMS],
    "nse0_vs_T": [("mackey_glass", ["nse0", "--T", "5:50:5"])],
    "heatmap": [("mackey_glass", ["heatmap", "--T", "5:50:5", "--m", "1:5"])],
    "optimizers": [(s, ["optim-compare"]) for s in SYSTEMS],
    "bounding": [(s, ["bounding-sweep"]) for s in SYSTEMS],
    "filter": [(s, ["filter-study"]) for s in SYSTEMS],
    "spectra": [(s, ["spectrum"]) for s in SYSTEMS],
    "lyapunov": [(s, ["lyapunov"]) for s in SYSTEMS],
    "linear": [(None, ["linear-study", "--nx", "6", "--T", "1:8", "--m", "1:4"])],
}

# experiments whose --runs is an ensemble size (spectra uses it as the number of tracks)
ENSEMBLE_LIKE = {"horizons", "horizon_vs_T", "nse0_vs_T", "heatmap", "optimizers", "bounding",
                 "spectra"}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("experiments", nargs="*", help=f"any of {', '.join(EXPERIMENTS)} (default: all)")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    unknown = set(args.experiments) - set(EXPERIMENTS)
    if unknown:
        p.error(f"unknown experiment(s): {', '.join(sorted(unknown))}")

    status = 0
    for name in args.experiments or list(EXPERIMENTS):
        for system, tail in EXPERIMENTS[name]:
            out = args.out / name / (system or "linear")
            cmd = [*tail, "--output-dir", str(out), "--seed", str(args.seed),
                   "--workers", str(args.workers)]
            if system:
                cmd += ["--system", system]
            if name in ENSEMBLE_LIKE:
                cmd += ["--runs", str(args.runs)]
            t0 = time.perf_counter()
            code = cli(cmd)
            print(f"[{name}/{system or '-'}] exit {code} in {time.perf_counter() - t0:.0f}s",
                  file=sys.stderr)
            status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
