"""The three summary figures drawn from sweep CSVs.

Each plotter takes the column table from reader.read_sweep and an output
path. Errors are shown as natural logarithms, taken here at plot time so
the CSV keeps the raw values; nonpositive entries are masked out rather
than plotted at -inf.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import SweepFormatError, read_sweep

_MARKERS = "osD^v*"


def _ln_masked(delta: np.ndarray) -> np.ndarray:
    out = np.full(delta.shape, np.nan)
    positive = delta > 0
    out[positive] = np.log(delta[positive])
    return out


def _grouped(table, group_key, x_key):
    """Yield (group value, x sorted, row selector in x order)."""
    for value in np.unique(table[group_key]):
        sel = np.flatnonzero(table[group_key] == value)
        order = np.argsort(table[x_key][sel])
        yield value, table[x_key][sel][order], sel[order]


def _error_and_probability_panels(table, x_key, x_label, out_path):
    fig, (ax_err, ax_prob) = plt.subplots(1, 2, figsize=(9.6, 4.0))
    for n, x, rows in _grouped(table, "n", x_key):
        ax_err.plot(x, _ln_masked(table["delta_n"][rows]), label=f"n={int(n)}")
        ax_prob.plot(x, table["p_kam"][rows], lw=0.9, label=f"n={int(n)}")
    # p_numeric repeats identically for every n; draw it once, emphasized
    _, x, rows = next(_grouped(table, "n", x_key))
    ax_prob.plot(x, table["p_numeric"][rows], "k", lw=2.4, label="numerical")
    ax_err.set_xlabel(x_label)
    ax_err.set_ylabel(r"$\ln \Delta_n$")
    ax_err.legend(fontsize="small")
    ax_prob.set_xlabel(x_label)
    ax_prob.set_ylabel("transition probability")
    ax_prob.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_eps_sweep(table, out_path) -> None:
    """ln(delta_n) and transition probabilities versus epsilon, per depth."""
    _error_and_probability_panels(table, "epsilon", r"$\varepsilon$", out_path)


def plot_area_sweep(table, out_path) -> None:
    """ln(delta_n) and transition probabilities versus pulse area, per depth."""
    _error_and_probability_panels(table, "area_over_pi", r"$A/\pi$", out_path)


def plot_iter_sweep(table, out_path) -> None:
    """ln(delta_n) versus iteration count, one marked series per epsilon."""
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for k, (eps, n, rows) in enumerate(_grouped(table, "epsilon", "n")):
        ax.plot(
            n,
            _ln_masked(table["delta_n"][rows]),
            marker=_MARKERS[k % len(_MARKERS)],
            linestyle=":",
            label=rf"$\varepsilon={eps:g}$",
        )
    ax.set_xlabel("iterations n")
    ax.set_ylabel(r"$\ln \Delta_n$")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


KINDS = {
    "eps-sweep": plot_eps_sweep,
    "iter-sweep": plot_iter_sweep,
    "area-sweep": plot_area_sweep,
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: input CSV, figure kind, output image path."""

    csv_path: str
    kind: str
    out_path: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind '{self.kind}'")

    def render(self) -> None:
        """Read the CSV and write the image; raises SweepFormatError/OSError."""
        KINDS[self.kind](read_sweep(self.csv_path), self.out_path)


__all__ = [
    "FigureSpec",
    "KINDS",
    "SweepFormatError",
    "plot_area_sweep",
    "plot_eps_sweep",
    "plot_iter_sweep",
]
