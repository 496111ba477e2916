"""Static plotting of kampulse sweep CSVs.

Reads the CSV files the kampulse CLI writes and renders them as the three
standard summary figures. No physics is recomputed here; the only interface
to the simulation package is its CSV format.
"""

from .figures import (
    KINDS,
    FigureSpec,
    plot_area_sweep,
    plot_eps_sweep,
    plot_iter_sweep,
)
from .reader import COLUMNS, SweepFormatError, read_sweep

__all__ = [
    "COLUMNS",
    "FigureSpec",
    "KINDS",
    "SweepFormatError",
    "plot_area_sweep",
    "plot_eps_sweep",
    "plot_iter_sweep",
    "read_sweep",
]
