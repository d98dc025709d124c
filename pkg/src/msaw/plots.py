"""Figure rendering for the report paths, written next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ensemble import EnsembleState
from .evaluation import MetricReport
from .naive_bayes import FeatureStat

WEIGHT_DISPLAY_FLOOR = 1e-12


def plot_method_aurocs(reports: Sequence[MetricReport], path: str | Path) -> None:
    names = [r.method_name for r in reports]
    values = [r.auroc for r in reports]
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(names) + 1.5))
    bars = ax.barh(range(len(names)), values, color="#4878d0")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlabel("AUROC")
    ax.set_xlim(0.0, 1.0)
    ax.axvline(0.5, color="gray", linestyle=":", linewidth=1)
    for bar, v in zip(bars, values):
        ax.text(v + 0.01, bar.get_y() + bar.get_height() / 2, f"{v:.3f}", va="center")
    ax.set_title("Method comparison on the target stream")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_weight_trajectory(
    trajectory: Sequence[EnsembleState], path: str | Path
) -> None:
    states = [s for s in trajectory if s.normalized_weights is not None]
    if not states:
        return
    steps = [s.stream_index for s in states]
    weights = np.vstack([s.normalized_weights for s in states])
    n_sources = weights.shape[1] - 1
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i in range(n_sources):
        ax.plot(steps, np.maximum(weights[:, i], WEIGHT_DISPLAY_FLOOR), label=f"source {i + 1}")
    ax.plot(
        steps,
        np.maximum(weights[:, -1], WEIGHT_DISPLAY_FLOOR),
        label="target",
        color="black",
        linewidth=2,
        linestyle="--",
    )
    ax.set_yscale("log")
    ax.set_xlabel("stream step")
    ax.set_ylabel(f"normalized weight (display floor {WEIGHT_DISPLAY_FLOOR:g})")
    ax.set_title("Adaptive ensemble weights over the target stream")
    ax.legend(loc="center left", bbox_to_anchor=(1.0, 0.5), fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_season_aurocs(
    season_ids: Sequence[str], values: Sequence[float], path: str | Path
) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(range(len(season_ids)), values, marker="o", color="#ee854a")
    ax.set_xticks(range(len(season_ids)))
    ax.set_xticklabels(season_ids, rotation=45, ha="right")
    ax.set_ylabel("AUROC on target season")
    ax.set_title("Per-season source models evaluated on the target")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_feature_stats(stats: Sequence[FeatureStat], path: str | Path) -> None:
    if not stats:
        return
    labels = [f"{s.feature}={s.category}" for s in stats]
    values = [s.log10_lr for s in stats]
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(stats) + 1.5))
    colors = ["#6acc64" if v >= 0 else "#d65f5f" for v in values]
    ax.barh(range(len(stats)), values, color=colors)
    ax.set_yticks(range(len(stats)))
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.axvline(0.0, color="gray", linewidth=1)
    ax.set_xlabel("log10 likelihood ratio (positive vs negative class)")
    ax.set_title("Most positively-associated feature categories")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
