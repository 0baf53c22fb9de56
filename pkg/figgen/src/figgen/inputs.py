"""Readers for the result files the figures consume.

The experiment tool writes three kinds of file and all of them are read
here.  Sweep CSVs carry one mean error per (model, estimator, ensemble
size, parameter) combination under the header ``model, estimator,
kernel, n, parameter, mean_error, trials, seed``; fit CSVs carry one
fitted one-coefficient power law per curve under ``model, estimator,
exponent_form, coefficient, r_squared, n_min, n_max``; matrix files are
binary, an 8-byte header of two little-endian 4-byte unsigned integers
(rows, then columns) followed by the entries as row-major little-endian
float64.

Validation is strict: files that deviate from these layouts abort with
a ``path:line:column`` report rather than producing a misleading
figure.  Parsed rows are plain tuples and loaded matrices are
read-only, so rendering code cannot modify its inputs.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

SWEEP_COLUMNS = ("model", "estimator", "kernel", "n", "parameter",
                 "mean_error", "trials", "seed")
FIT_COLUMNS = ("model", "estimator", "exponent_form", "coefficient",
               "r_squared", "n_min", "n_max")

_MATRIX_HEADER = struct.Struct("<II")


class InputError(Exception):
    """Base class for unusable input files; maps to exit code 3."""


class SchemaError(InputError):
    """A file deviates from its documented layout.

    The message starts with ``path:line:column`` (column omitted when
    the problem is not tied to one field), and the parts are kept as
    attributes for programmatic use.

    Attributes
    ----------
    path : str
        File the violation was found in.
    line : int
        One-based line number; the header is line 1.
    column : int or None
        One-based field index within the line, when applicable.
    """

    def __init__(self, path, line: int, column: int | None, message: str):
        location = f"{path}:{line}"
        if column is not None:
            location = f"{location}:{column}"
        super().__init__(f"{location}: {message}")
        self.path = str(path)
        self.line = line
        self.column = column


class EmptyInputError(InputError):
    """A structurally valid file contains no data rows to plot."""


class SweepRow(NamedTuple):
    """One measured mean error from a parameter sweep."""

    model: str
    estimator: str
    kernel: str
    n: int
    parameter: float
    mean_error: float
    trials: int
    seed: int


class FitRow(NamedTuple):
    """One fitted power law ``coefficient * n**p`` with its fit quality."""

    model: str
    estimator: str
    exponent_form: str
    coefficient: float
    r_squared: float
    n_min: int
    n_max: int


# Cell parsers per column; str cells pass through but must be nonempty
# except for `kernel`, which sweep files leave blank for estimators
# without a taper kernel.
_SWEEP_TYPES = (str, str, "blank-ok", int, float, float, int, int)
_FIT_TYPES = (str, str, str, float, float, int, int)


def _read_records(path, expected_columns, cell_types):
    """Parse a CSV against a fixed header, reporting line and column."""
    try:
        with open(path, newline="") as fh:
            records = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError:
        raise SchemaError(path, 1, 1, "not a text file") from None
    if not records:
        raise SchemaError(path, 1, 1, "empty file, expected a header line")
    header = records[0]
    for idx, name in enumerate(expected_columns, start=1):
        if idx > len(header):
            raise SchemaError(
                path, 1, idx, f"missing column {name!r}"
            )
        if header[idx - 1] != name:
            raise SchemaError(
                path, 1, idx,
                f"expected column {name!r}, found {header[idx - 1]!r}",
            )
    if len(header) > len(expected_columns):
        extra = header[len(expected_columns)]
        raise SchemaError(
            path, 1, len(expected_columns) + 1,
            f"unexpected extra column {extra!r}",
        )
    rows = []
    for line, record in enumerate(records[1:], start=2):
        if not record:
            continue
        if len(record) != len(expected_columns):
            column = min(len(record) + 1, len(expected_columns))
            raise SchemaError(
                path, line, column,
                f"expected {len(expected_columns)} fields, got {len(record)}",
            )
        values = []
        for column, (name, cell, kind) in enumerate(
            zip(expected_columns, record, cell_types), start=1
        ):
            if kind is str or kind == "blank-ok":
                if kind is str and not cell:
                    raise SchemaError(
                        path, line, column, f"column {name!r} is empty"
                    )
                values.append(cell)
                continue
            try:
                values.append(kind(cell))
            except ValueError:
                raise SchemaError(
                    path, line, column,
                    f"column {name!r}: cannot parse {cell!r} as {kind.__name__}",
                ) from None
        rows.append(tuple(values))
    return rows


def read_sweep(path) -> list[SweepRow]:
    """Load a sweep CSV.

    Parameters
    ----------
    path : path-like
        File with the sweep header.

    Returns
    -------
    list of SweepRow

    Raises
    ------
    SchemaError
        If the header or any cell deviates from the sweep layout.
    EmptyInputError
        If the file holds a header but no data rows.
    """
    rows = _read_records(path, SWEEP_COLUMNS, _SWEEP_TYPES)
    if not rows:
        raise EmptyInputError(f"{path}: sweep file has no data rows")
    return [SweepRow(*row) for row in rows]


def read_fits(path) -> list[FitRow]:
    """Load a fit CSV; same contract as :func:`read_sweep`."""
    rows = _read_records(path, FIT_COLUMNS, _FIT_TYPES)
    if not rows:
        raise EmptyInputError(f"{path}: fit file has no data rows")
    return [FitRow(*row) for row in rows]


def classify_csv(path) -> str:
    """Identify a CSV as ``"sweep"`` or ``"fit"`` from its header line."""
    try:
        with open(path, newline="") as fh:
            header = next(csv.reader(fh), None)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError:
        raise SchemaError(path, 1, 1, "not a text file") from None
    if header is None:
        raise SchemaError(path, 1, 1, "empty file, expected a header line")
    if tuple(header) == SWEEP_COLUMNS:
        return "sweep"
    if tuple(header) == FIT_COLUMNS:
        return "fit"
    raise SchemaError(
        path, 1, 1,
        "header matches neither the sweep nor the fit layout",
    )


def read_matrix(path) -> np.ndarray:
    """Load a binary matrix file as a read-only float64 array.

    Raises
    ------
    InputError
        If the file is shorter than its header or its length disagrees
        with the dimensions the header declares.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    if len(raw) < _MATRIX_HEADER.size:
        raise InputError(
            f"{path}: truncated header ({len(raw)} bytes, expected at least "
            f"{_MATRIX_HEADER.size})"
        )
    rows, cols = _MATRIX_HEADER.unpack_from(raw)
    expected = _MATRIX_HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise InputError(
            f"{path}: expected {expected} bytes for a {rows}x{cols} matrix, "
            f"got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_MATRIX_HEADER.size)
    # frombuffer over immutable bytes yields a non-writeable view, which
    # doubles as a guard that rendering never touches its inputs.
    return data.reshape(rows, cols)
