"""Report emission: delimited results, a human-readable table with the
Initial Noise row first, significance results, and rendered figures
alongside.

CSV reals carry 12 significant digits so re-parsing reproduces the
in-memory values; exact matches (zero error) appear as "exact" in tables
and as "inf" in CSV.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from . import figures
from .evaluation import EvalReport, MetricResult, SweepRow
from .stats import TTestResult
from .training import TrainLog

_METHOD_LABELS = {
    "supervised": "Supervised Learning",
    "transfer": "Transfer Learning",
    "meta": "Meta-Denoising",
}


def format_real(value: float) -> str:
    return f"{value:.12g}"


def _format_db(value: float) -> str:
    return "exact" if math.isinf(value) else f"{value:.2f}"


def emit_report(report: EvalReport, out_dir, render_figures: bool = True) -> list[Path]:
    """Write report.csv, report_table.txt, ttests.csv, and (by default)
    report.png under out_dir; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    csv_path = out_dir / "report.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["method", "n_tasks", "k", "seed", "metric_mean_db", "metric_sd_db", "n_test"])
        for method in report.results:
            for seed in report.seeds:
                result = report.results[method][seed]
                writer.writerow(
                    [
                        method,
                        report.n_tasks,
                        report.k,
                        seed,
                        format_real(result.mean),
                        format_real(result.sd),
                        result.count,
                    ]
                )
    written.append(csv_path)

    table_path = out_dir / "report_table.txt"
    lines = [
        f"Problem metric: {report.metric.upper()} (dB), k={report.k}, "
        f"{report.n_tasks} tasks, seeds={list(report.seeds)}",
        "",
        f"{'Method':<22}{'# Tasks':>9}{report.metric.upper() + ' (dB)':>14}{'sd':>8}",
    ]
    initial = [report.initial_noise[s] for s in report.seeds if report.initial_noise.get(s)]
    if initial:
        initial_mean = sum(r.mean for r in initial) / len(initial)
        lines.append(f"{'Initial Noise':<22}{'-':>9}{_format_db(initial_mean):>14}{'':>8}")
    for method in report.results:
        pooled = report.pooled_values(method)
        mean = sum(pooled) / len(pooled)
        sd = 0.0
        if len(pooled) > 1:
            sd = math.sqrt(sum((v - mean) ** 2 for v in pooled) / (len(pooled) - 1))
        label = _METHOD_LABELS.get(method, method)
        lines.append(f"{label:<22}{report.n_tasks:>9}{_format_db(mean):>14}{sd:>8.2f}")
    lines.append("")
    for label, outcome in report.ttests.items():
        if isinstance(outcome, TTestResult):
            lines.append(
                f"t-test {label}: t={outcome.t_statistic:.4f}, df={outcome.degrees_of_freedom}, "
                f"one-tailed p={outcome.p_value:.3g}"
                + (" (degenerate spread)" if outcome.degenerate else "")
            )
        else:
            lines.append(f"t-test {label}: {outcome}")
    table_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(table_path)

    ttest_path = out_dir / "ttests.csv"
    with ttest_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["comparison", "t", "df", "one_tailed_p", "degenerate", "note"])
        for label, outcome in report.ttests.items():
            if isinstance(outcome, TTestResult):
                writer.writerow(
                    [
                        label,
                        format_real(outcome.t_statistic),
                        outcome.degrees_of_freedom,
                        format_real(outcome.p_value),
                        int(outcome.degenerate),
                        "",
                    ]
                )
            else:
                writer.writerow([label, "", "", "", "", outcome])
    written.append(ttest_path)

    if render_figures and report.results:
        written.append(figures.comparison_figure(report, out_dir / "report.png"))
    return written


def emit_sweep(rows: list[SweepRow], metric: str, out_dir, render_figures: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    csv_path = out_dir / "sweep.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["k", "metric_mean_db", "metric_sd_db", "n_seeds"])
        for row in rows:
            writer.writerow(
                [row.k, format_real(row.mean), format_real(row.sd), len(row.per_seed_means)]
            )
    written.append(csv_path)
    if render_figures and rows:
        written.append(figures.sweep_figure(rows, metric, out_dir / "sweep.png"))
    return written


def emit_train_log(log: TrainLog, out_dir, render_figures: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    csv_path = out_dir / "train_log.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["iteration", "mean_inner_loss", "displacement_norm", "wall_time_s"])
        for i in range(len(log)):
            writer.writerow(
                [
                    log.iterations[i],
                    format_real(log.mean_inner_loss[i]),
                    format_real(log.displacement_norm[i]),
                    format_real(log.wall_time_s[i]),
                ]
            )
    written.append(csv_path)
    if render_figures and len(log):
        written.append(figures.train_curve_figure(log, out_dir / "train_curve.png"))
    return written


def emit_metric_result(
    result: MetricResult, initial: MetricResult, metric: str, out_dir, render_figures: bool = True
) -> list[Path]:
    """Evaluation of a single model: metrics.csv plus a histogram figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    csv_path = out_dir / "metrics.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["row", "metric_mean_db", "metric_sd_db", "n_test"])
        writer.writerow(["initial_noise", format_real(initial.mean), format_real(initial.sd), initial.count])
        writer.writerow(["model", format_real(result.mean), format_real(result.sd), result.count])
    written.append(csv_path)
    if render_figures:
        written.append(figures.metric_histogram_figure(result, metric, out_dir / "metrics.png"))
    return written
