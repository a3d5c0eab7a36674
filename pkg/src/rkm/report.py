"""Figure rendering for the experiment commands.

All figures are written as self-contained SVG files.  Output is
deterministic: the SVG hash salt is pinned and no creation date is
embedded, so identical runs give identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rkm"

import matplotlib.pyplot as plt
import numpy as np

_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown")


def save_labeled_scatter(path, values, labels, title, ylabel="second singular vector"):
    """Index-vs-value scatter colored by true component label."""
    values = np.asarray(values)
    labels = np.asarray(labels)
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=100)
    idx = np.arange(values.size)
    for j, lab in enumerate(np.unique(labels)):
        mask = labels == lab
        ax.scatter(
            idx[mask],
            values[mask],
            s=8,
            color=_COLORS[j % len(_COLORS)],
            label=f"component {lab}",
            linewidths=0,
        )
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("sample index")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_seed_series(path, seeds, series, title, ylabel):
    """Per-seed values of one or more named series (dict name -> values)."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=100)
    for j, (name, vals) in enumerate(series.items()):
        ax.plot(seeds, vals, "o-", color=_COLORS[j % len(_COLORS)], label=name, ms=4)
    ax.set_xlabel("seed")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
