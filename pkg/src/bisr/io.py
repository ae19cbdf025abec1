"""Reading and writing signals and filters as CSV.

Signals are written as two columns ``index,value``. Readers accept that
layout, a single column of values, or an optional header row.
"""

from __future__ import annotations

import csv
import io
import os
import sys

import numpy as np

from .errors import DomainError


def fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _parse_rows(text: str, source: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DomainError(f"{source}: no data")
    try:
        float(rows[0][-1])
    except ValueError:
        rows = rows[1:]  # header
    vals = []
    for i, r in enumerate(rows):
        cell = r[-1].strip()
        try:
            vals.append(float(cell))
        except ValueError:
            raise DomainError(f"{source}: row {i + 1}: not a number: {cell!r}") from None
    out = np.array(vals)
    if out.size == 0 or not np.all(np.isfinite(out)):
        raise DomainError(f"{source}: values must be finite and non-empty")
    return out


def read_signal(path) -> np.ndarray:
    """Values from a one- or two-column CSV file (``-`` reads stdin)."""
    if str(path) == "-":
        return _parse_rows(sys.stdin.read(), "<stdin>")
    if not os.path.isfile(path):
        raise DomainError(f"no such file: {path}")
    with open(path, newline="") as fh:
        return _parse_rows(fh.read(), str(path))


def read_taps(arg) -> np.ndarray:
    """Filter taps from a CSV file, or an inline comma-separated list."""
    if os.path.isfile(str(arg)) or str(arg) == "-":
        return read_signal(arg)
    try:
        taps = np.array([float(v) for v in str(arg).split(",") if v.strip()])
    except ValueError:
        raise DomainError(f"not a file or a comma-separated list of taps: {arg!r}") from None
    if taps.size == 0:
        raise DomainError("empty filter")
    return taps


def signal_csv(x, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(["index", "value"])
    for i, v in enumerate(np.asarray(x, dtype=float)):
        w.writerow([i, fmt(v)])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_signal(path, x) -> None:
    write_text(path, signal_csv(x))
