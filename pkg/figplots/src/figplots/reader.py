"""Loading of sweep CSV files.

The sweep CSV layout is: any number of '#' comment lines, one header line,
then one row per (grid point, truncation depth). All values are plain
decimal floats. This module only reads the files; it never recomputes any
of the physics behind them.
"""

from __future__ import annotations

import csv

import numpy as np

#: Columns every sweep CSV must provide (extras are carried through).
COLUMNS = (
    "epsilon",
    "area_over_pi",
    "n",
    "delta_n",
    "p_numeric",
    "p_kam",
    "oracle_drift",
    "wall_time_ms",
)


class SweepFormatError(ValueError):
    """A sweep CSV is missing, empty, or does not match the expected layout."""


def read_sweep(path) -> dict[str, np.ndarray]:
    """Read a sweep CSV into a dict of float arrays keyed by column name.

    Raises SweepFormatError for unreadable files, a missing required column
    (the message names the column), or non-numeric/short rows.
    """
    try:
        with open(path, newline="") as fh:
            rows = [
                row
                for row in csv.reader(fh)
                if row and not row[0].lstrip().startswith("#")
            ]
    except OSError as exc:
        raise SweepFormatError(f"cannot read '{path}': {exc}") from None
    if not rows:
        raise SweepFormatError(f"'{path}' has no header row")
    header = [name.strip() for name in rows[0]]
    for name in COLUMNS:
        if name not in header:
            raise SweepFormatError(f"missing column '{name}' in '{path}'")
    body = rows[1:]
    if not body:
        raise SweepFormatError(f"'{path}' has no data rows")
    table: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        try:
            table[name] = np.array([float(row[j]) for row in body])
        except (ValueError, IndexError):
            raise SweepFormatError(
                f"bad value in column '{name}' of '{path}'"
            ) from None
    return table
