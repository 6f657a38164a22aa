"""Matplotlib rendering for Murphy diagrams and switching reports.

Figures are rendered headless and written to files next to the delimited
output; nothing here is needed by the numerical layers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def murphy_figure(curve, title: str | None = None):
    """Mean elementary score versus decision threshold, one line per source.

    The grid carries left-limit entries directly before the corresponding
    on-point entries, so a plain polyline through the grid reproduces the
    piecewise-linear curve including its jumps at forecast values.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for name, values in curve.scores.items():
        ax.plot(curve.thetas, values, label=name, linewidth=1.4)
    ax.set_xlabel(r"decision threshold $\theta$")
    ax.set_ylabel("mean elementary score")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def switching_figure(report, title: str | None = None):
    """Null-rejection frequency per competitor, one panel per scoring rule."""
    rules = report.rules
    fig, axes = plt.subplots(1, len(rules), figsize=(3.0 * len(rules), 4.0),
                             sharey=True)
    axes = np.atleast_1d(axes)
    idx = np.arange(len(report.competitors))
    width = 0.38
    for ax, rule in zip(axes, rules):
        clean = [report.probability(c, rule, "clean") for c in report.competitors]
        contaminated = [report.probability(c, rule, "contaminated")
                        for c in report.competitors]
        ax.bar(idx - width / 2, clean, width, label="clean", color="#4878d0")
        ax.bar(idx + width / 2, contaminated, width, label="contaminated",
               color="#d65f5f")
        ax.set_title(f"a = {rule}")
        ax.set_xticks(idx)
        ax.set_xticklabels(report.competitors, rotation=60, ha="right",
                           fontsize=8)
        ax.grid(axis="y", alpha=0.3)
    axes[0].set_ylabel("rejection probability")
    axes[0].legend(frameon=False, fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return fig


def save_figure(fig, path, dpi: int = 150):
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
