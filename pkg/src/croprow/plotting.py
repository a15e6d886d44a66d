"""Figures for evaluation reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def category_metrics_figure(report):
    """Four panels, one bar per category: accuracy, IoU, angle error, detection rate."""
    cats = list(report.per_category)
    labels = [c.category_id for c in cats]
    x = np.arange(len(cats))
    panels = [
        ("Accuracy (%)", [c.mean_accuracy * 100 for c in cats]),
        ("Mean IoU", [c.mean_iou for c in cats]),
        ("Angle error (deg)", [np.nan if c.mean_angle_error is None else c.mean_angle_error for c in cats]),
        ("Detection rate", [c.detection_rate for c in cats]),
    ]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(8, 5.5))
        for ax, (title, values) in zip(axes.ravel(), panels):
            ax.bar(x, values, color="0.35", width=0.7)
            ax.set_title(title)
            ax.set_xticks(x)
            ax.set_xticklabels(labels)
            for xi, v in zip(x, values):
                if np.isnan(v):
                    ax.text(xi, 0, "NA", ha="center", va="bottom", fontsize=7)
        if report.overall is not None:
            fig.suptitle(
                f"{report.overall.sample_count} samples, "
                f"overall IoU {report.overall.mean_iou:.4f}"
            )
        fig.tight_layout()
    return fig


def angle_error_histogram(report, bins: int = 20):
    errors = [s.angle_error for s in report.samples if s.ok and s.angle_error is not None]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        if errors:
            ax.hist(errors, bins=bins, color="0.35")
        ax.set_xlabel("per-image angle error (deg)")
        ax.set_ylabel("images")
        missed = sum(1 for s in report.samples if s.ok and s.k == 0)
        ax.set_title(f"{len(errors)} detected, {missed} without a scoring cluster")
        fig.tight_layout()
    return fig


def save_report_figures(report, directory) -> list:
    """Write the report figures as PNG files; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, make in (
        ("category_metrics.png", category_metrics_figure),
        ("angle_error_hist.png", angle_error_histogram),
    ):
        fig = make(report)
        path = directory / name
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written
