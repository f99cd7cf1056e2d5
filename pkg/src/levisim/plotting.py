"""SVG figure emitters.

Figures are written without timestamps and with a fixed hash salt so the
files are byte-identical between runs.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "levisim"
matplotlib.rcParams["svg.fonttype"] = "none"

_METADATA = {"Date": None, "Creator": None}


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, format="svg", metadata=_METADATA)
    plt.close(fig)


def line_plot(path, series, xlabel, ylabel, logx=False, logy=False, title=None, markers=False):
    """``series`` is a list of ``(x, y, label)``."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for x, y, label in series:
        ax.plot(x, y, "o-" if markers else "-", ms=3, lw=1.2, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if any(label for _, _, label in series):
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def heatmap(path, x, y, values, xlabel, ylabel, cbar_label, title=None):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    mesh = ax.pcolormesh(np.asarray(x), np.asarray(y), np.asarray(values), shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=cbar_label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
