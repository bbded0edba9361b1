"""CSV/JSON artifact writers and the per-run manifest.

CSV files carry a header row, '.' decimals and LF line ends; floats are
written with shortest round-trip precision so repeated runs with the same
seeds produce byte-identical files.  JSON is UTF-8 with sorted keys.  The
manifest is written atomically at the end of a run and lists every output
file the run produced.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Grid, GridFunction, build_grid


def write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    if any(len(c) != rows for c in columns):
        raise ValueError("CSV columns must have equal length")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(repr(float(c[i])) for c in columns) + "\n")


def write_grid_csv(path, f: GridFunction, value_name: str = "value") -> None:
    write_csv(path, ["x", value_name], [f.grid.nodes, f.values])


def read_grid_csv(path) -> GridFunction:
    """Read a two-column (x, value) CSV back onto its uniform grid."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x, values = data[:, 0], data[:, 1]
    if x.size < 3:
        raise ValueError(f"{path}: need at least 3 grid nodes")
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=0, atol=1e-9 * max(dx, 1.0)):
        raise ValueError(f"{path}: grid spacing is not uniform")
    if abs(x[0]) > 1e-12 * dx:
        raise ValueError(f"{path}: grid must start at x = 0")
    grid = build_grid(float(x[-1]), x.size - 1)
    return GridFunction(grid, values)


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunManifest:
    """Record of one CLI invocation; written atomically as manifest.json."""

    subcommand: str
    config: dict
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    started: float = field(default_factory=time.time)

    def add_output(self, path) -> Path:
        self.outputs.append(str(path))
        return Path(path)

    def write(self, run_dir, exit_status: int) -> None:
        payload = {
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_clock_s": round(time.time() - self.started, 3),
            "exit_status": exit_status,
        }
        missing = [p for p in self.outputs if not os.path.exists(p)]
        if missing:
            raise FileNotFoundError(f"manifest lists missing outputs: {missing}")
        final = Path(run_dir) / "manifest.json"
        tmp = final.with_suffix(".json.tmp")
        write_json(tmp, payload)
        os.replace(tmp, final)


def ensure_run_dir(base, name: str) -> Path:
    run_dir = Path(base) / name
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir
