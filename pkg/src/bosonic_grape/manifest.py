"""Output-directory bookkeeping: file hashes, run manifests and run records."""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import __version__

MANIFEST_NAME = "manifest.json"


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class OutputDir:
    """Collects files written by one command and finishes with a manifest listing all of them."""

    def __init__(self, path, config: dict, command: str):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.command = command
        self.files: list[str] = []
        self._t0 = time.time()
        self._started = time.strftime("%Y-%m-%dT%H:%M:%S%z")

    def write_text(self, name: str, text: str) -> Path:
        p = self.path / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        if name not in self.files:
            self.files.append(name)
        return p

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, dumps(obj))

    def finish(self, status: str = "ok", error: str | None = None) -> Path:
        manifest = {
            "command": self.command,
            "status": status,
            "version": __version__,
            "started": self._started,
            "wall_clock_s": round(time.time() - self._t0, 3),
            "config": self.config,
            "files": {name: sha256_file(self.path / name) for name in sorted(self.files)},
        }
        if error is not None:
            manifest["error"] = error
        p = self.path / MANIFEST_NAME
        p.write_text(dumps(manifest))
        return p


def run_record(problem, gate) -> dict:
    """Reproducibility record of one optimization."""
    return {
        "problem_hash": problem.digest(),
        "seed": gate.seed,
        "preset": problem.preset,
        "weights": {"c1": problem.c1, "c2": problem.c2, "c3": problem.c3},
        "u_max_MHz": problem.u_max,
        "n_iter": gate.n_iter,
        "converged": gate.converged,
        "message": gate.message,
        "final": gate.cost_terms(),
        "trace": gate.trace,
    }
