"""Figure rendering for the reporting paths (confusion matrices, curves).

Uses the Agg backend so figures render headlessly next to the delimited
output files.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .toyml.training import MetricRecord

__all__ = ["render_confusion_matrix", "render_training_curves"]

PathLike = Union[str, Path]


def render_confusion_matrix(
    path: PathLike, confusion: np.ndarray, class_names: Sequence[str], title: str = "Confusion matrix"
) -> None:
    """Row-normalized confusion heatmap with per-cell annotations."""
    k = confusion.shape[0]
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * k, 0.8 + 0.8 * k))
    im = ax.imshow(confusion, vmin=0.0, vmax=1.0, cmap="Blues")
    ax.set_xticks(range(k), labels=class_names, rotation=45, ha="right")
    ax.set_yticks(range(k), labels=class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(title)
    for i in range(k):
        for j in range(k):
            v = confusion[i, j]
            ax.text(
                j, i, f"{v:.2f}", ha="center", va="center",
                color="white" if v > 0.5 else "black", fontsize=8,
            )
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_training_curves(path: PathLike, history: List[MetricRecord]) -> None:
    """Loss (and accuracy, when present) per epoch, one line per split."""
    splits = sorted({r.split for r in history})
    has_acc = any(np.isfinite(r.accuracy) for r in history)
    n_axes = 2 if has_acc else 1
    fig, axes = plt.subplots(1, n_axes, figsize=(5.0 * n_axes, 3.5), squeeze=False)
    for split in splits:
        recs = [r for r in history if r.split == split]
        epochs = [r.epoch for r in recs]
        axes[0][0].plot(epochs, [r.loss for r in recs], label=split)
        if has_acc:
            axes[0][1].plot(epochs, [r.accuracy for r in recs], label=split)
    axes[0][0].set_xlabel("epoch")
    axes[0][0].set_ylabel("loss")
    axes[0][0].legend()
    if has_acc:
        axes[0][1].set_xlabel("epoch")
        axes[0][1].set_ylabel("accuracy")
        axes[0][1].set_ylim(0.0, 1.0)
        axes[0][1].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
