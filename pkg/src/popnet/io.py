"""Delimited and JSON output with atomic writes and stable formatting.

CSV files carry a header row and CRLF line endings; floats are written with
repr-shortest formatting so re-running a configuration reproduces files
byte for byte.  Writers stage into a temp file in the target directory and
rename into place.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .meanfield import OdeSolution
from .model import TrajectoryRecord

__all__ = [
    "atomic_write_text",
    "write_csv",
    "write_json",
    "trajectory_to_csv",
    "solution_to_csv",
]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    import io as _io
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(Path(path), buf.getvalue())


def write_json(path: Path, payload: dict) -> None:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(f"not JSON-serializable: {type(o)}")
    text = json.dumps(payload, indent=2, sort_keys=True, default=default) + "\n"
    atomic_write_text(Path(path), text)


def trajectory_to_csv(path: Path, record: TrajectoryRecord) -> None:
    """Trajectory schema: time, mean_1..mean_P, adaptation?, unit_<i>...?"""
    P = record.n_populations
    header = ["time"] + [f"mean_{a + 1}" for a in range(P)]
    cols = [record.times] + [record.population_means[:, a] for a in range(P)]
    if record.adaptation_trace is not None:
        header.append("adaptation")
        cols.append(record.adaptation_trace)
    if record.neuron_samples is not None:
        for j, gid in enumerate(record.sample_indices):
            header.append(f"unit_{int(gid)}")
            cols.append(record.neuron_samples[:, j])
    rows = zip(*cols)
    write_csv(path, header, rows)


def solution_to_csv(path: Path, sol: OdeSolution, n_populations: int) -> None:
    """Same schema as trajectories so the two overlay directly."""
    P = n_populations
    header = ["time"] + [f"mean_{a + 1}" for a in range(P)]
    cols = [sol.times] + [sol.states[:, a] for a in range(P)]
    if sol.states.shape[1] > P:
        header.append("adaptation")
        cols.append(sol.states[:, P])
    write_csv(path, header, zip(*cols))
