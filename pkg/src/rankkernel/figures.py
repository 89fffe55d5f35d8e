"""Matplotlib renderings written next to the delimited outputs.

All functions save straight to file with the Agg backend, so they work in
headless runs and produce the same bytes for the same inputs.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .clustering import Dendrogram  # noqa: E402
from .mmd import MMDReport  # noqa: E402


def save_gram_heatmap(matrix: np.ndarray, path: str | Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    image = ax.imshow(np.asarray(matrix), cmap="viridis", interpolation="nearest")
    fig.colorbar(image, ax=ax, fraction=0.046)
    ax.set_xlabel("ranking index")
    ax.set_ylabel("ranking index")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_mmd_histogram(report: MMDReport, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    if report.null_statistics:
        ax.hist(report.null_statistics, bins=30, color="0.7", label="shuffled")
    ax.axvline(report.statistic, color="crimson", label="observed")
    ax.set_xlabel("MMD$^2$")
    ax.set_ylabel("count")
    ax.set_title(f"p = {report.p_value:.4g} ({report.num_shuffles} shuffles)")
    ax.legend(frameon=False)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_dendrogram(tree: Dendrogram, path: str | Path, labels: list | None = None) -> None:
    from scipy.cluster import hierarchy

    fig, ax = plt.subplots(figsize=(max(5.0, tree.n_leaves * 0.11), 3.6))
    hierarchy.dendrogram(
        tree.to_scipy_linkage(),
        ax=ax,
        labels=[str(x) for x in labels] if labels is not None else None,
        no_labels=labels is None,
        color_threshold=0.0,
        above_threshold_color="0.3",
    )
    ax.set_ylabel("merge height")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
