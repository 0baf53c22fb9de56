"""Flat matrix files: a small binary format and full-precision CSV.

Binary layout: an 8-byte header of two little-endian 4-byte unsigned
integers (rows, then columns) followed by the entries as row-major
little-endian float64.  CSV files carry one matrix row per line with
entries formatted by shortest round-trip repr, so reading them back
reproduces the doubles exactly.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<II")


def save_matrix(path, matrix: np.ndarray) -> None:
    """Write a 2-d float array in the binary matrix format."""
    mat = np.ascontiguousarray(matrix, dtype="<f8")
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {mat.shape}")
    rows, cols = mat.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(rows, cols))
        fh.write(mat.tobytes(order="C"))


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header ({len(raw)} bytes)")
    rows, cols = _HEADER.unpack_from(raw)
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise ValueError(
            f"{path}: expected {expected} bytes for a {rows}x{cols} matrix, "
            f"got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return data.reshape(rows, cols).astype(float)


def save_matrix_csv(path, matrix: np.ndarray) -> None:
    """Write a matrix as CSV with exact round-trip formatting."""
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {mat.shape}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in mat:
            writer.writerow([repr(float(v)) for v in row])


def load_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix_csv`."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)
