"""Delimited output with round-trip-exact floats and atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Iterable, Sequence

import numpy as np

from .spectral import RadialProfile

FLOAT_FMT = "%.17g"


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % float(x)
    return str(x)


def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write a one-line-header CSV with 17-significant-digit decimals.

    Returns the number of data rows.  The file appears atomically.
    """
    lines = [",".join(header)]
    n = 0
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row of length {len(row)} does not match header {header}")
        lines.append(",".join(format_value(x) for x in row))
        n += 1
    _atomic_write_text(path, "\n".join(lines) + "\n")
    return n


def read_csv(path: str) -> tuple[list[str], dict[str, np.ndarray]]:
    """Read back a CSV written by ``write_csv`` as float columns."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        columns: list[list[float]] = [[] for _ in header]
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise ValueError(f"{path}: row with {len(parts)} fields, expected {len(header)}")
            for col, part in zip(columns, parts):
                col.append(float(part))
    return header, {name: np.array(col) for name, col in zip(header, columns)}


def write_radial_profile(path: str, profile: RadialProfile) -> int:
    """The documented annulus-profile schema: bin_lo, bin_hi, value, std_error, count."""
    rows = zip(
        profile.bin_edges[:-1],
        profile.bin_edges[1:],
        profile.values,
        profile.std_errors,
        profile.counts,
    )
    return write_csv(path, ["bin_lo", "bin_hi", "value", "std_error", "count"], rows)


def write_json(path: str, obj) -> None:
    """Stable-key-order JSON, written atomically."""
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()
