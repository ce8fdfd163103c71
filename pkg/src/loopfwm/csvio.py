"""CSV reading and writing with a fixed, locale-independent dialect.

All tables use comma separators, ``.`` decimals, one header row, LF
line endings, and UTF-8.  Floats are written with 12 significant
digits, so identical arrays always serialize to identical bytes —
the property golden-file regression tests rely on.  Lines starting
with ``#`` are comments; writers place them before the header, and
summary lines may be appended after the data.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

_FLOAT_FORMAT = "{:.12g}"


class CsvParseError(ValueError):
    """Raised for malformed CSV input; the message names the line."""


def format_float(value: float) -> str:
    return _FLOAT_FORMAT.format(float(value))


def write_table(
    path: str | Path,
    header: tuple[str, ...],
    columns: tuple[np.ndarray, ...],
    comments: tuple[str, ...] = (),
    trailer_comments: tuple[str, ...] = (),
) -> None:
    """Write named columns as CSV, with optional ``#`` comment lines.

    ``comments`` go above the header, ``trailer_comments`` after the
    last data row (used for summary lines).
    """
    if len(header) != len(columns):
        raise ValueError(f"{len(header)} header names for {len(columns)} columns")
    arrays = [np.asarray(column, dtype=float) for column in columns]
    length = arrays[0].size
    if any(array.ndim != 1 or array.size != length for array in arrays):
        raise ValueError("all columns must be 1-D and equally long")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in range(length):
            writer.writerow([format_float(array[row]) for array in arrays])
        for comment in trailer_comments:
            handle.write(f"# {comment}\n")


def read_table(path: str | Path) -> tuple[tuple[str, ...], np.ndarray, tuple[str, ...]]:
    """Read a CSV table written by :func:`write_table`.

    Returns
    -------
    (header, data, comments)
        ``data`` has one column per header name and may be empty;
        ``comments`` collects every ``#`` line regardless of position.

    Raises
    ------
    CsvParseError
        Naming the 1-based line number of the first malformed row.
    """
    header: tuple[str, ...] | None = None
    rows: list[list[float]] = []
    comments: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for number, line in enumerate(handle, start=1):
            stripped = line.rstrip("\n").rstrip("\r")
            if not stripped:
                continue
            if stripped.startswith("#"):
                comments.append(stripped[1:].strip())
                continue
            fields = next(csv.reader([stripped]))
            if header is None:
                header = tuple(field.strip() for field in fields)
                if any(not name for name in header):
                    raise CsvParseError(f"line {number}: empty column name in header")
                continue
            if len(fields) != len(header):
                raise CsvParseError(
                    f"line {number}: expected {len(header)} fields, got {len(fields)}"
                )
            try:
                rows.append([float(field) for field in fields])
            except ValueError as exc:
                raise CsvParseError(f"line {number}: {exc}") from exc
    if header is None:
        raise CsvParseError("line 1: file has no header row")
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(header)))
    return header, data, tuple(comments)


def read_columns(
    path: str | Path, names: tuple[str, ...]
) -> tuple[np.ndarray, ...]:
    """Read specific named columns from a CSV table."""
    header, data, _ = read_table(path)
    indices = []
    for name in names:
        if name not in header:
            raise CsvParseError(
                f"column '{name}' not found; file has columns {', '.join(header)}"
            )
        indices.append(header.index(name))
    return tuple(data[:, index] for index in indices)
