"""CSV and manifest writers.

Column names and their order are a public contract. Floats are written with
``repr`` (shortest round-trip decimal), so files are byte-stable for
bit-identical inputs.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import Trajectory
from .ensemble import DephasingCurve, DisorderCurve, EfficiencyMap, EnsembleAverage
from .lattice import SpectrumResult

SPECTRUM_COLUMNS = ("k", "eigenvalue")
GAMMA_SCAN_COLUMNS = ("Gamma_over_J", "p_sink_at_t_eval")
DISORDER_SWEEP_COLUMNS = ("sigma_over_J", "mean", "stderr")
DEPHASING_SWEEP_COLUMNS = ("gamma_over_J", "p_sink_at_t_eval")
MAP_COLUMNS = ("sigma_over_J", "gamma_over_J", "mean", "stderr", "M", "t_eval")


def trajectory_columns(n_sites: int) -> tuple[str, ...]:
    return ("Jt", "p_sink", *(f"p_site_{j}" for j in range(1, n_sites + 1)), "coherence_l1")


def closed_columns(n_sites: int) -> tuple[str, ...]:
    return ("Jt", *(f"p_site_{j}" for j in range(1, n_sites + 1)), "norm")


def comparison_columns(labels: Sequence[str]) -> tuple[str, ...]:
    cols = ["Jt"]
    for label in labels:
        cols += [label, f"{label}_stderr"]
    return tuple(cols)


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: list

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row has {len(row)} fields, header has {len(self.columns)}")
            for x in row:
                if isinstance(x, (float, np.floating)) and not np.isfinite(x):
                    raise ValueError(f"non-finite value in table with columns {self.columns[:3]}...")

    def csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(x) for x in row])
        return buf.getvalue()

    def json(self) -> str:
        rows = [[_plain(x) for x in row] for row in self.rows]
        return json_text({"columns": list(self.columns), "rows": rows})

    def render(self, fmt: str) -> str:
        return self.csv() if fmt == "csv" else self.json()


def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    return Table(tuple(columns), list(rows)).csv()


def spectrum_rows(spec: SpectrumResult):
    labels = spec.labels if spec.labels is not None else np.arange(len(spec.eigenvalues))
    return [(int(k), float(e)) for k, e in zip(labels, spec.eigenvalues)]


def spectrum_table(spec: SpectrumResult) -> Table:
    return Table(SPECTRUM_COLUMNS, spectrum_rows(spec))


def trajectory_table(traj: Trajectory) -> Table:
    sink = np.clip(traj.sink_population, 0.0, 1.0)
    rows = [
        (t, s, *pops, c)
        for t, s, pops, c in zip(traj.times, sink, traj.site_populations, traj.coherence_l1)
    ]
    return Table(trajectory_columns(traj.n_sites), rows)


def closed_table(traj: Trajectory) -> Table:
    rows = [(t, *pops, pops.sum()) for t, pops in zip(traj.times, traj.site_populations)]
    return Table(closed_columns(traj.n_sites), rows)


def gamma_scan_table(grid, curve) -> Table:
    return Table(GAMMA_SCAN_COLUMNS, list(zip(np.asarray(grid, float), np.asarray(curve, float))))


def disorder_sweep_table(curve: DisorderCurve) -> Table:
    return Table(DISORDER_SWEEP_COLUMNS, list(zip(curve.sigma_over_J, curve.mean, curve.stderr)))


def dephasing_sweep_table(curve: DephasingCurve) -> Table:
    return Table(DEPHASING_SWEEP_COLUMNS, list(zip(curve.gamma_over_J, curve.p_sink)))


def map_table(m: EfficiencyMap) -> Table:
    rows = []
    for i, s in enumerate(m.sigma_grid):
        for j, g in enumerate(m.gamma_grid):
            rows.append((float(s), float(g), float(m.mean[i, j]), float(m.stderr[i, j]), int(m.M), float(m.t_eval)))
    return Table(MAP_COLUMNS, rows)


def comparison_table(curves: dict[str, EnsembleAverage]) -> Table:
    labels = list(curves)
    times = curves[labels[0]].times
    rows = []
    for i, t in enumerate(times):
        row = [float(t)]
        for label in labels:
            row += [float(curves[label].mean[i]), float(curves[label].stderr[i])]
        rows.append(row)
    return Table(comparison_columns(labels), rows)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in row] for row in reader])
    return header, data


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_all(directory, files: dict[str, str]) -> list[Path]:
    """Write every file or none: each goes to a temporary name first, then all are renamed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            tmp = directory / f".{name}.partial"
            tmp.write_text(text)
            staged.append((tmp, directory / name))
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]
