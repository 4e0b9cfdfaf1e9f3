"""Matplotlib renderings written alongside the delimited reports."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .pipeline import LevelSweepRow

_QUALITY_SERIES = (
    ("mean_bleu", "BLEU"),
    ("mean_meteor", "METEOR-lite"),
    ("mean_rouge1", "ROUGE-1"),
    ("mean_rougeL", "ROUGE-L"),
    ("mean_cosine", "cosine"),
    ("mean_theta_f1", "theta F1"),
)


def render_sweep_figure(rows: Sequence[LevelSweepRow], path: str | Path) -> Path:
    """Quality and perplexity curves against the saved-token percentage."""
    path = Path(path)
    saved = [row.mean_saved_pct for row in rows]
    fig, (ax_quality, ax_ppl) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)

    for attr, label in _QUALITY_SERIES:
        ax_quality.plot(saved, [getattr(row, attr) for row in rows],
                        marker="o", markersize=3, label=label)
    ax_quality.set_ylabel("metric (%)")
    ax_quality.set_ylim(-2, 102)
    ax_quality.grid(alpha=0.3)
    ax_quality.legend(fontsize=8, ncol=2)
    ax_quality.set_title("Reconstruction quality vs. saved tokens")

    ax_ppl.plot(saved, [row.mean_perplexity for row in rows],
                marker="o", markersize=3, color="tab:red")
    ax_ppl.set_xlabel("mean saved tokens (%)")
    ax_ppl.set_ylabel("perplexity")
    ax_ppl.grid(alpha=0.3)

    for row in rows:
        ax_quality.annotate(str(row.set_size), (row.mean_saved_pct, 1),
                            fontsize=7, ha="center")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


_SUMMARY_BARS = (
    ("theta_precision_pct", "theta P"),
    ("theta_recall_pct", "theta R"),
    ("theta_f1_pct", "theta F1"),
    ("sacrebleu_pct", "BLEU"),
    ("meteor_pct", "METEOR-lite"),
    ("rouge1_pct", "ROUGE-1"),
    ("rougeL_pct", "ROUGE-L"),
    ("cosine_pct", "cosine"),
    ("saved_tokens_pct", "saved"),
)


def render_eval_figure(summary: Mapping[str, tuple[float, float]], path: str | Path) -> Path:
    """Mean and std of each percentage metric as a bar chart."""
    path = Path(path)
    labels = [label for _, label in _SUMMARY_BARS]
    means = [summary[key][0] for key, _ in _SUMMARY_BARS]
    stds = [summary[key][1] for key, _ in _SUMMARY_BARS]

    fig, ax = plt.subplots(figsize=(8, 4))
    xs = range(len(labels))
    ax.bar(xs, means, yerr=stds, capsize=3, color="tab:blue", alpha=0.85)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("percent")
    ax.set_title("Batch evaluation: mean and std per metric")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
