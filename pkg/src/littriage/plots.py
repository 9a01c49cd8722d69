"""Figure rendering for evaluation reports.

Writes static PNGs next to the delimited report output: a confusion-matrix
heatmap and a per-class F1 bar chart.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import MetricsReport
from .records import CLASS_DISPLAY, N_CLASSES


def plot_confusion(report: MetricsReport, path: str | Path) -> Path:
    counts = np.array(report.confusion.counts)
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(N_CLASSES), CLASS_DISPLAY, rotation=30, ha="right")
    ax.set_yticks(range(N_CLASSES), CLASS_DISPLAY)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("Gold")
    ax.set_title("Confusion matrix")
    threshold = counts.max() / 2 if counts.max() else 0.5
    for g in range(N_CLASSES):
        for p in range(N_CLASSES):
            ax.text(
                p, g, f"{counts[g, p]:,}",
                ha="center", va="center",
                color="white" if counts[g, p] > threshold else "black",
                fontsize=8,
            )
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_f1_bars(report: MetricsReport, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    x = np.arange(N_CLASSES)
    ax.bar(x, report.f1, color="#4878a8")
    ax.axhline(report.macro_f1, color="#b04040", linestyle="--",
               label=f"macro-F1 = {report.macro_f1:.2f}")
    ax.set_xticks(x, CLASS_DISPLAY, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("F1")
    ax.set_title("Per-class F1")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
