"""CSV and JSON readers and writers for snapshots, series, grids and reports.

Floats are written with 17 significant digits so files round-trip exactly
and identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dynamics import MonitorSeries
from ..lattice import HexLattice, build_lattice

SNAPSHOT_COLUMNS = ("node_index", "cell1", "cell2", "sublattice", "x", "y", "mx", "my", "mz")
SERIES_COLUMNS = ("t_star", "H_star", "grad1_sq", "grad2_sq", "grad3_sq", "torque_sq", "dmdt_sq")
GRID_COLUMNS = ("i", "j", "x", "y", "mx", "my", "mz")
_SUB_NAMES = ("A", "B")


class SnapshotFormatError(ValueError):
    """A snapshot file does not follow the expected layout."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_snapshot(path, lat: HexLattice, m: np.ndarray) -> None:
    """One header line and one row per node."""
    m = np.asarray(m, dtype=float)
    c1, c2 = lat.cells()
    rows = (
        (i, int(c1[i]), int(c2[i]), _SUB_NAMES[lat.sublattice[i]],
         fmt(lat.positions[i, 0]), fmt(lat.positions[i, 1]),
         fmt(m[i, 0]), fmt(m[i, 1]), fmt(m[i, 2]))
        for i in range(lat.num_nodes)
    )
    _write_rows(path, SNAPSHOT_COLUMNS, rows)


@dataclass(frozen=True)
class Snapshot:
    cells: np.ndarray  # (N, 2) ints
    sublattice: np.ndarray  # (N,) 0 = A, 1 = B
    positions: np.ndarray  # (N, 2)
    m: np.ndarray  # (N, 3)

    def infer_lattice(self) -> HexLattice:
        """Rebuild the lattice whose node table this snapshot holds."""
        n1 = int(self.cells[:, 0].max()) + 1
        n2 = int(self.cells[:, 1].max()) + 1
        if len(self.m) != 2 * n1 * n2:
            raise SnapshotFormatError(
                f"{len(self.m)} rows do not fill a {n1} x {n2} two-sublattice supercell"
            )
        a_origin = self.positions[0]
        b_origin = self.positions[n1 * n2]
        h = float(b_origin[1] - a_origin[1])
        if not h > 0:
            raise SnapshotFormatError("cannot infer the bond length from node positions")
        lat = build_lattice(n1, n2, h)
        if not np.allclose(lat.positions, self.positions, atol=1e-9 * h, rtol=0):
            raise SnapshotFormatError("node positions do not match a lattice with the inferred size")
        return lat


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise SnapshotFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    if not lines:
        raise SnapshotFormatError(f"{path}: empty file")
    header = next(csv.reader([lines[0]]))
    if tuple(header) != SNAPSHOT_COLUMNS:
        raise SnapshotFormatError(
            f"{path}:1: expected header {','.join(SNAPSHOT_COLUMNS)}, got {','.join(header)}"
        )
    cells, subs, pos, mag = [], [], [], []
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if len(row) != len(SNAPSHOT_COLUMNS):
            raise SnapshotFormatError(
                f"{path}:{lineno}: expected {len(SNAPSHOT_COLUMNS)} fields, got {len(row)}"
            )
        try:
            idx = int(row[0])
            c = (int(row[1]), int(row[2]))
            vals = [float(v) for v in row[4:]]
        except ValueError as exc:
            raise SnapshotFormatError(f"{path}:{lineno}: {exc}") from exc
        if idx != lineno - 2:
            raise SnapshotFormatError(f"{path}:{lineno}: node_index {idx} out of order")
        if row[3] not in _SUB_NAMES:
            raise SnapshotFormatError(f"{path}:{lineno}: sublattice must be A or B, got {row[3]!r}")
        if not np.all(np.isfinite(vals)):
            raise SnapshotFormatError(f"{path}:{lineno}: non-finite value")
        cells.append(c)
        subs.append(_SUB_NAMES.index(row[3]))
        pos.append(vals[:2])
        mag.append(vals[2:])
    if not mag:
        raise SnapshotFormatError(f"{path}: no data rows")
    return Snapshot(np.array(cells), np.array(subs), np.array(pos), np.array(mag))


def write_series(path, monitors: MonitorSeries) -> None:
    _write_rows(path, SERIES_COLUMNS, ([fmt(v) for v in row] for row in monitors.rows()))


def read_series(path) -> dict:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return {name: data[:, i] for i, name in enumerate(header)}


def write_grid(path, points: np.ndarray, values: np.ndarray) -> None:
    """Grid samples ``values[i, j]`` at ``points[i, j]``, row-major in ``(i, j)``."""
    nx, ny = values.shape[:2]
    rows = (
        (i, j, fmt(points[i, j, 0]), fmt(points[i, j, 1]), *(fmt(v) for v in values[i, j]))
        for i in range(nx) for j in range(ny)
    )
    _write_rows(path, GRID_COLUMNS, rows)


def write_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
