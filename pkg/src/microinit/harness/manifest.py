"""Per-invocation manifest: enough to regenerate every file it lists."""
from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path

import numba
import numpy as np
import scipy

from .. import __version__
from .config import ExperimentConfig, config_hash, dumps_config

__all__ = ["file_sha256", "versions", "write_json", "write_manifest"]


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    return {"microinit": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(directory, command: str, argv: list, cfg: ExperimentConfig | None,
                   outputs: list, seeds: dict | None = None) -> Path:
    """Write ``manifest.json`` next to ``outputs``.

    No timestamps are recorded, so identical invocations give identical bytes.
    """
    directory = Path(directory)
    doc = {
        "command": command,
        "argv": list(argv),
        "versions": versions(),
        "seeds": seeds or {},
        "outputs": {Path(p).name: file_sha256(p) for p in outputs},
    }
    if cfg is not None:
        doc["config"] = dumps_config(cfg)
        doc["config_hash"] = config_hash(cfg)
    return write_json(directory / "manifest.json", doc)
