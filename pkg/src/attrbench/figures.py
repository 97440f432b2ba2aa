"""Figure rendering for benchmark reports.

All plots go straight to files through the Agg backend, so they work in
headless runs.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import EvalReport
from .taskgen import Task


def plot_accuracy_bars(reports: Sequence[EvalReport], path) -> None:
    """Per-method selection accuracy with 95% error bars."""
    order = sorted(reports, key=lambda r: -r.accuracy)
    names = [r.method for r in order]
    acc = [r.accuracy for r in order]
    err = [r.ci_half_width for r in order]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * len(names)), 4.0))
    ax.bar(range(len(names)), acc, yerr=err, capsize=3, color="#4878a8")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("selection accuracy")
    ax.set_ylim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_tuning_curves(
    curves: Mapping[str, Sequence[tuple[float, float]]], path
) -> None:
    """Accuracy against threshold for every tuned method."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for name, curve in sorted(curves.items()):
        points = np.asarray(curve)
        ax.plot(points[:, 0], points[:, 1], label=name, linewidth=1.2)
    ax.set_xlabel("threshold")
    ax.set_ylabel("selection accuracy")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_property_scatter(
    reports: Sequence[EvalReport], rho: float | None, path
) -> None:
    """Structural consistency rate against accuracy, one dot per method."""
    rows = [r for r in reports if r.prop1_rate is not None]
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    ax.scatter(
        [r.prop1_rate for r in rows], [r.accuracy for r in rows], color="#a85454"
    )
    for r in rows:
        ax.annotate(r.method, (r.prop1_rate, r.accuracy), fontsize=6, alpha=0.8)
    title = "structural rate vs accuracy"
    if rho is not None:
        title += f" (spearman rho = {rho:.2f})"
    ax.set_title(title)
    ax.set_xlabel("structural consistency rate")
    ax.set_ylabel("selection accuracy")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_task_2d(task: Task, path) -> None:
    """Scatter a two-dimensional task's centroids, colored by label.

    Ground-truth selections are written next to each point.
    """
    if task.n != 2:
        raise ValueError("only 2-dimensional tasks can be drawn")
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    for centroid in task.centroids:
        x, y = centroid.coords
        color = "#c04040" if centroid.label else "#4060c0"
        ax.scatter([x], [y], color=color, s=24)
        label = "{" + ",".join(str(i) for i in centroid.selection.indices()) + "}"
        ax.annotate(label, (x, y), fontsize=6, xytext=(3, 3), textcoords="offset points")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(task.id)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
