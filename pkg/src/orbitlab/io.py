"""Serialisation of embedded vectors and report tables.

Binary dump layout (little endian)::

    8 bytes   magic  b"QEMBED01"
    uint64    dims   (floats per row)
    uint64    count  (rows)
    float64   count * dims values, row-major
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

MAGIC = b"QEMBED01"
_HEADER = struct.Struct("<8sQQ")


def write_binary(path, rows) -> None:
    rows = np.ascontiguousarray(np.asarray(rows, dtype="<f8"))
    if rows.ndim != 2:
        raise ValueError("binary dump expects a 2-d array of embedded vectors")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows.shape[1], rows.shape[0]))
        fh.write(rows.tobytes())


def read_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated embedding dump")
    magic, dims, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    body = raw[_HEADER.size :]
    if len(body) != 8 * dims * count:
        raise ValueError("embedding dump size does not match its header")
    return np.frombuffer(body, dtype="<f8").reshape(count, dims).copy()


def write_vectors_csv(path, rows) -> None:
    rows = np.asarray(rows, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(rows.shape[1])])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def read_vectors_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([[float(v) for v in row] for row in reader])


def write_table_csv(path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
