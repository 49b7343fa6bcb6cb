"""Deterministic CSV/JSON writers and the per-run manifest.

Floats in CSV files carry 17 significant digits so outputs are diff-stable
and round-trip exactly; wall-clock data lives only in the manifest.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def _jsonify(value: Any):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)!r}")


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               default=_jsonify) + "\n")


@dataclass
class RunManifest:
    command: str
    config_path: str
    parameters: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    versions: str = ""
    wall_time: float = 0.0

    def start(self) -> "RunManifest":
        self._t0 = time.monotonic()
        return self

    def finish(self, out_dir: Path) -> Path:
        self.wall_time = time.monotonic() - getattr(self, "_t0", time.monotonic())
        path = out_dir / "manifest.json"
        payload = {
            "command": self.command,
            "config_path": self.config_path,
            "parameters": self.parameters,
            "outputs": self.outputs,
            "versions": self.versions,
            "wall_time": self.wall_time,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path

    def record(self, path: Path) -> Path:
        self.outputs.append(path.name)
        return path
