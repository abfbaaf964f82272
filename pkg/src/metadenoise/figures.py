"""Matplotlib rendering for report outputs. All figures go to files via the
Agg backend; nothing here opens a display."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

matplotlib.rcParams.update(
    {
        "figure.dpi": 110,
        "savefig.dpi": 150,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
    }
)

_METHOD_LABELS = {
    "supervised": "Supervised Learning",
    "transfer": "Transfer Learning",
    "meta": "Meta-Denoising",
}


def _finite(values):
    return [v for v in values if math.isfinite(v)]


def comparison_figure(report, path) -> Path:
    """Bar chart of per-method mean metric (pooled over seeds) with the
    across-seed spread, plus the initial-noise level as a dashed line."""
    methods = list(report.results.keys())
    means = []
    spreads = []
    for method in methods:
        per_seed = [report.results[method][s].mean for s in report.seeds]
        means.append(float(sum(per_seed) / len(per_seed)))
        if len(per_seed) > 1:
            mu = means[-1]
            spreads.append(math.sqrt(sum((v - mu) ** 2 for v in per_seed) / (len(per_seed) - 1)))
        else:
            spreads.append(0.0)
    fig, ax = plt.subplots(figsize=(5.2, 3.4), constrained_layout=True)
    positions = range(len(methods))
    ax.bar(positions, means, yerr=spreads, capsize=4, color="#4878b0")
    ax.axhline(report.initial_mean(), color="#c44e52", linestyle="--", label="Initial noise")
    ax.set_xticks(list(positions))
    ax.set_xticklabels([_METHOD_LABELS.get(m, m) for m in methods], rotation=10)
    ax.set_ylabel(f"{report.metric.upper()} (dB)")
    ax.set_title(f"k={report.k}, {report.n_tasks} tasks, {len(report.seeds)} seeds")
    ax.legend(loc="best")
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def sweep_figure(rows, metric: str, path) -> Path:
    """Mean metric vs k with one-standard-deviation band."""
    ks = [r.k for r in rows]
    means = [r.mean for r in rows]
    sds = [r.sd for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    ax.errorbar(ks, means, yerr=sds, marker="o", capsize=4, color="#4878b0")
    ax.set_xlabel("k (fine-tuning shots)")
    ax.set_ylabel(f"{metric.upper()} (dB)")
    ax.set_xticks(ks)
    ax.set_title("k-shot sweep")
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def train_curve_figure(log, path) -> Path:
    """Post-adaptation loss and outer displacement per iteration."""
    fig, axes = plt.subplots(1, 2, figsize=(7.6, 3.0), constrained_layout=True)
    axes[0].plot(log.iterations, log.mean_inner_loss, color="#4878b0")
    axes[0].set_xlabel("outer iteration")
    axes[0].set_ylabel("mean inner loss")
    axes[1].plot(log.iterations, log.displacement_norm, color="#55a868")
    axes[1].set_xlabel("outer iteration")
    axes[1].set_ylabel("outer step norm")
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def metric_histogram_figure(result, metric: str, path) -> Path:
    """Distribution of per-sample metric values on the test set."""
    values = _finite(result.values)
    fig, ax = plt.subplots(figsize=(5.0, 3.2), constrained_layout=True)
    if values:
        ax.hist(values, bins=min(30, max(5, len(values) // 5)), color="#4878b0")
    ax.axvline(result.mean, color="#c44e52", linestyle="--", label=f"mean {result.mean:.2f} dB")
    ax.set_xlabel(f"{metric.upper()} (dB)")
    ax.set_ylabel("test samples")
    ax.legend(loc="best")
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
