"""Delimited report tables and the figures rendered alongside them.

Every report path pairs machine-readable csv with a png: count tables
get bar charts, agreement matrices get heatmaps, per-tag metrics get
grouped bars.  Figures use matplotlib's object API directly so no GUI
backend is ever touched.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

from matplotlib.figure import Figure

from .evaluation.consensus import AgreementMatrix
from .evaluation.fidelity import FidelityReport
from .evaluation.metrics import BinaryReport, MetricReport, SentimentReport, round_half_even
from .thematic import ThemeSet


def _percent(value: float) -> str:
    return f"{round_half_even(value * 100.0, 2):.2f}"


def write_metric_report_csv(
    report: MetricReport, per_tag_path: str | Path, summary_path: str | Path
) -> None:
    """Per-tag table (percent, 2dp, macro row last) plus a one-row
    summary of the example-based and aggregate metrics (fractions)."""
    with Path(per_tag_path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tag", "precision", "recall", "f1"])
        for tag in report.per_tag:
            writer.writerow([tag.tag, _percent(tag.precision), _percent(tag.recall), _percent(tag.f1)])
        writer.writerow(
            ["macro", _percent(report.macro_precision), _percent(report.macro_recall),
             _percent(report.macro_f1)]
        )
    with Path(summary_path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["jaccard", "avg_precision", "macro_p", "macro_r", "macro_f1",
             "micro_p", "micro_r", "micro_f1", "hamming_loss", "subset_accuracy"]
        )
        writer.writerow(
            [f"{v:.6f}" for v in (
                report.mean_jaccard, report.avg_precision,
                report.macro_precision, report.macro_recall, report.macro_f1,
                report.micro_precision, report.micro_recall, report.micro_f1,
                report.hamming_loss, report.subset_accuracy,
            )]
        )


def write_binary_report_csv(report: BinaryReport, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["accuracy", "precision", "recall", "f1", "tp", "fp", "fn", "tn"])
        writer.writerow(
            [_percent(report.accuracy), _percent(report.precision), _percent(report.recall),
             _percent(report.f1), report.tp, report.fp, report.fn, report.tn]
        )


def write_sentiment_report_csv(report: SentimentReport, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class", "precision", "recall", "f1"])
        for cls in report.per_class:
            writer.writerow([cls.tag, _percent(cls.precision), _percent(cls.recall), _percent(cls.f1)])
        writer.writerow(
            ["macro", _percent(report.macro_precision), _percent(report.macro_recall),
             _percent(report.macro_f1)]
        )
        writer.writerow(["accuracy", _percent(report.accuracy), "", ""])


def write_agreement_csv(
    matrix: AgreementMatrix,
    path: str | Path,
    subgroups: Mapping[str, Sequence[str]] | None = None,
) -> None:
    """Square matrix (blank diagonal) plus subgroup-average footer rows."""
    if subgroups is None:
        subgroups = {"all pairs": matrix.rater_ids}
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["rater", *matrix.rater_ids])
        for a in matrix.rater_ids:
            row: list[str] = [a]
            for b in matrix.rater_ids:
                row.append("" if a == b else f"{matrix.pair(a, b):.2f}")
            writer.writerow(row)
        for name, rater_ids in subgroups.items():
            value = matrix.subgroup_average(rater_ids)
            writer.writerow([f"average:{name}", f"{value:.2f}"] + [""] * (len(matrix.rater_ids) - 1))


def write_rubric_rates_csv(rates: Sequence[tuple[str, float]], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["category", "error_rate_percent"])
        for category, rate in rates:
            writer.writerow([category, f"{rate:.2f}"])


def write_fidelity_csv(report: FidelityReport, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["verdict", "count"])
        for verdict in ("verbatim", "minor_edit", "hallucination"):
            writer.writerow([verdict, report.count(verdict)])
        writer.writerow(["hallucination_rate_percent", f"{round_half_even(report.hallucination_rate, 2):.2f}"])


def write_theme_csv(themes: ThemeSet, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["title", "count"])
        for theme in sorted(themes.themes, key=lambda t: (-t.count, t.title)):
            writer.writerow([theme.title, theme.count])


# --- figures ---------------------------------------------------------------


def render_counts_figure(counts: Mapping[str, int], path: str | Path, title: str | None = None) -> Path:
    """Horizontal bar chart of a count table, largest on top."""
    ordered = sorted(counts.items(), key=lambda kv: (kv[1], kv[0]))
    keys = [k for k, _ in ordered]
    values = [v for _, v in ordered]
    fig = Figure(figsize=(8, max(2.0, 0.45 * len(keys) + 1.2)))
    ax = fig.subplots()
    ax.barh(range(len(keys)), values, color="#4878a8")
    ax.set_yticks(range(len(keys)))
    ax.set_yticklabels(keys)
    ax.set_xlabel("count")
    if title:
        ax.set_title(title)
    for index, value in enumerate(values):
        ax.text(value, index, f" {value}", va="center", fontsize=9)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    return path


def render_agreement_figure(matrix: AgreementMatrix, path: str | Path) -> Path:
    """Heatmap of pairwise agreement percents."""
    n = len(matrix.rater_ids)
    grid = [[100.0 if i == j else matrix.pair(matrix.rater_ids[i], matrix.rater_ids[j]) for j in range(n)] for i in range(n)]
    fig = Figure(figsize=(1.1 * n + 2.5, 1.1 * n + 1.5))
    ax = fig.subplots()
    image = ax.imshow(grid, cmap="viridis", vmin=0.0, vmax=100.0)
    ax.set_xticks(range(n))
    ax.set_xticklabels(matrix.rater_ids, rotation=45, ha="right")
    ax.set_yticks(range(n))
    ax.set_yticklabels(matrix.rater_ids)
    for i in range(n):
        for j in range(n):
            if i != j:
                ax.text(j, i, f"{grid[i][j]:.2f}", ha="center", va="center", color="white", fontsize=8)
    fig.colorbar(image, ax=ax, label="mean Jaccard (%)")
    ax.set_title("pairwise agreement")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    return path


def render_per_tag_figure(report: MetricReport, path: str | Path) -> Path:
    """Grouped precision/recall/F1 bars per tag."""
    tags = [m.tag for m in report.per_tag]
    positions = range(len(tags))
    width = 0.27
    fig = Figure(figsize=(max(6.0, 1.1 * len(tags)), 4.5))
    ax = fig.subplots()
    for offset, (name, values) in enumerate(
        (
            ("precision", [m.precision for m in report.per_tag]),
            ("recall", [m.recall for m in report.per_tag]),
            ("f1", [m.f1 for m in report.per_tag]),
        )
    ):
        ax.bar(
            [p + (offset - 1) * width for p in positions],
            [v * 100 for v in values],
            width=width,
            label=name,
        )
    ax.set_xticks(list(positions))
    ax.set_xticklabels(tags, rotation=30, ha="right")
    ax.set_ylabel("percent")
    ax.set_ylim(0, 105)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    return path
