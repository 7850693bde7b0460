"""Serialized outputs: legacy-ASCII VTK meshes and plain CSV time series.

Floats are written with ``repr`` (shortest exact form, plain decimal
point), so rewriting what was read reproduces the bytes and numeric
round-trips are exact.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["write_vtk", "read_vtk_points", "write_csv", "read_csv", "CsvLog"]


def _fmt(x) -> str:
    return repr(float(x))


def write_vtk(path, mesh, point_data: dict | None = None,
              cell_data: dict | None = None,
              title: str = "stenofsi fields") -> None:
    """Write a triangle mesh with named fields as a legacy ASCII VTK file.

    ``point_data`` maps names to per-vertex arrays, shape (nv,) for scalars
    or (nv, 2) for vectors (padded with z = 0); ``cell_data`` maps names to
    per-triangle scalars (nt,).
    """
    verts = mesh.vertices
    tris = mesh.triangles
    nv, nt = verts.shape[0], tris.shape[0]
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    for x, y in verts:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0.0")
    lines.append(f"CELLS {nt} {4 * nt}")
    for a, b, c in tris:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {nt}")
    lines.extend(["5"] * nt)

    def emit(block: dict, count: int, kind: str):
        lines.append(f"{kind} {count}")
        for name, arr in block.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape[0] != count:
                raise ValueError(f"field {name!r} has {arr.shape[0]} values, "
                                 f"expected {count}")
            if arr.ndim == 1:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(_fmt(v) for v in arr)
            elif arr.ndim == 2 and arr.shape[1] == 2:
                lines.append(f"VECTORS {name} double")
                lines.extend(f"{_fmt(vx)} {_fmt(vy)} 0.0" for vx, vy in arr)
            else:
                raise ValueError(f"field {name!r} must be (n,) or (n, 2), "
                                 f"got shape {arr.shape}")

    if point_data:
        emit(point_data, nv, "POINT_DATA")
    if cell_data:
        emit(cell_data, nt, "CELL_DATA")

    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk_points(path) -> np.ndarray:
    """Vertex coordinates (n, 2) of a legacy ASCII VTK file we wrote."""
    with open(path) as fh:
        tokens = iter(fh.read().split())
    for tok in tokens:
        if tok == "POINTS":
            n = int(next(tokens))
            next(tokens)  # dtype
            flat = [float(next(tokens)) for _ in range(3 * n)]
            return np.asarray(flat).reshape(n, 3)[:, :2]
    raise ValueError(f"{path}: no POINTS section found")


class CsvLog:
    """Incrementally written CSV: header row, one record per time step.

    Rows are flushed as they are written so a crashed run leaves every
    completed step on disk.
    """

    def __init__(self, path, header: list[str]):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(header)
        self._fh.flush()
        self.rows = 0

    def write_row(self, values) -> None:
        self._writer.writerow(
            [v if isinstance(v, str) else _fmt(v) for v in values])
        self._fh.flush()
        self.rows += 1

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def write_csv(path, header: list[str], rows) -> None:
    """One-shot CSV write of a whole series."""
    with CsvLog(path, header) as log:
        for row in rows:
            log.write_row(row)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read back a CSV written here: (header, float array (n_rows, n_cols))."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.asarray(rows, dtype=float)
