"""Deterministic output formats: trajectory CSV, scan CSV, height binaries.

CSV floats are written with 17 significant digits so reruns with the
same config and seed are byte-identical.  Height fields go to a raw
little-endian float64 dump behind a fixed 32-byte header.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsRow
from .grid import Grid, HeightField

TRAJECTORY_COLUMNS = (
    "t", "volume", "energy_bulk", "energy_surface", "energy_total",
    "lyapunov", "stationarity_residual", "h_dev_l2", "d_distance",
    "tau", "coupling_iters",
)

SCAN_COLUMNS = ("d", "min_eig_L2", "min_eig_H1")

_MAGIC = b"ELFH"
_VERSION = 1
_HEADER_SIZE = 32


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def trajectory_row_text(row: DiagnosticsRow) -> str:
    values = [
        row.t, row.volume, row.energy_bulk, row.energy_surface,
        row.energy_total, row.lyapunov, row.stationarity_residual,
        row.h_dev_l2, row.d_distance, row.tau,
    ]
    return ",".join(format_float(v) for v in values) + f",{int(row.coupling_iters)}"


def write_trajectory_csv(path, rows) -> None:
    path = Path(path)
    lines = [",".join(TRAJECTORY_COLUMNS)]
    lines.extend(trajectory_row_text(r) for r in rows)
    path.write_text("\n".join(lines) + "\n")


def write_scan_csv(path, table) -> None:
    """table: iterable of (d, min_eig_L2, min_eig_H1)."""
    path = Path(path)
    lines = [",".join(SCAN_COLUMNS)]
    for d, e_l2, e_h1 in table:
        lines.append(",".join(format_float(v) for v in (d, e_l2, e_h1)))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path) -> dict:
    """Small reader for the package's own CSV files: column -> float array."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    cols = {name: [] for name in header}
    for line in text[1:]:
        for name, val in zip(header, line.split(",")):
            cols[name].append(float(val))
    return {name: np.asarray(vals) for name, vals in cols.items()}


def write_height(path, h: HeightField) -> None:
    """Raw dump: 32-byte header (magic, version, dims) + row-major float64 LE."""
    grid = h.grid
    dims = list(grid.shape) + [0] * (2 - grid.surface_dim)
    header = struct.pack(
        "<4sIIII", _MAGIC, _VERSION, grid.surface_dim, dims[0], dims[1]
    )
    header += b"\x00" * (_HEADER_SIZE - len(header))
    data = np.ascontiguousarray(h.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + data)


def read_height(path) -> HeightField:
    raw = Path(path).read_bytes()
    magic, version, ndim, d0, d1 = struct.unpack_from("<4sIIII", raw, 0)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a height file (magic {magic!r})")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    shape = (d0,) if ndim == 1 else (d0, d1)
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER_SIZE).reshape(shape)
    return HeightField(Grid(ndim, d0), values.astype(float))
