"""Matplotlib figures written next to the tabular report."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..render import read_ppm  # noqa: E402
from .report import Report, metric_label  # noqa: E402

# fixed metadata keeps the PNG bytes stable between runs
_PNG_META = {"Software": None}


def plot_scores(report: Report, path) -> Path:
    """One panel per metric, grouped bars per scene, one bar per variant."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(report.metrics)
    fig, axes = plt.subplots(1, n, figsize=(3.6 * n, 3.2), squeeze=False)
    x = np.arange(len(report.scenes))
    width = 0.8 / len(report.variants)
    use_norm = report.normalized
    for ax, metric in zip(axes[0], report.metrics):
        for j, variant in enumerate(report.variants):
            vals = []
            for s in report.scenes:
                c = report.cell(metric, s, variant)
                v = c.normalized if use_norm and c.normalized is not None else c.raw
                vals.append(v if np.isfinite(v) else np.nan)
            ax.bar(x + (j - (len(report.variants) - 1) / 2) * width, vals, width, label=variant)
        ax.set_xticks(x)
        ax.set_xticklabels(report.scenes, rotation=20)
        ax.set_title(metric_label(metric) + (" (z)" if use_norm else ""))
        ax.axhline(0.0, color="0.5", linewidth=0.6)
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_variants(scene_id: str, variants, images_dir, path):
    """Reference (if rendered) and every variant of one scene side by side."""
    images_dir = Path(images_dir)
    panels = []
    ref = images_dir / f"{scene_id}__reference.ppm"
    if ref.exists():
        panels.append(("reference", read_ppm(ref)))
    for v in variants:
        p = images_dir / f"{scene_id}__{v}.ppm"
        if p.exists():
            panels.append((v, read_ppm(p)))
    if not panels:
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, axes = plt.subplots(1, len(panels), figsize=(3.0 * len(panels), 3.0), squeeze=False)
    for ax, (label, img) in zip(axes[0], panels):
        ax.imshow(img.pixels, interpolation="nearest")
        ax.set_title(label)
        ax.axis("off")
    fig.suptitle(scene_id)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)
    return path
