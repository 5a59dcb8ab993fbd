"""Markdown and CSV rendering for metrics, curves, and statistics tables.

Rates render with three decimals and lengths with two, so reports built
from the same counts are byte-stable.
"""

from __future__ import annotations

import csv
from collections.abc import Sequence
from io import StringIO
from pathlib import Path

from .aggregate import CurvePoint
from .audit import LengthRow, MetricsReport
from .store import ErrorType

EMPTY_CELL = "—"  # em dash placeholder for empty populations


def format_rate(x: float) -> str:
    return f"{x:.3f}"


def format_length(x: float | None) -> str:
    return EMPTY_CELL if x is None else f"{x:.2f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(" --- " for _ in header) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def render_metrics_markdown(report: MetricsReport, *, title: str = "Metrics") -> str:
    rows = [
        ["Automatic accuracy", format_rate(report.automatic_accuracy)],
        ["False positive rate", format_rate(report.false_positive_rate)],
        ["Manual accuracy", format_rate(report.manual_accuracy)],
        ["Total solutions", str(report.total)],
        ["Automatically correct", str(report.auto_correct)],
        ["False positives", str(report.false_positives)],
    ]
    return f"## {title}\n\n" + _table(["Metric", "Value"], rows)


def render_comparison_table(rows: Sequence[tuple[str, float, float]], *, title: str = "Comparison") -> str:
    """Rows of (label, accuracy, false positive rate) with 3-decimal cells."""
    body = [[label, format_rate(acc), format_rate(fp)] for label, acc, fp in rows]
    return f"## {title}\n\n" + _table(["Model", "Accuracy", "False Positive Rate"], body)


def render_error_type_table(counts: dict, *, title: str = "Error Type Statistics") -> str:
    rows = [[etype.value, str(counts.get(etype, 0))] for etype in ErrorType]
    return f"## {title}\n\n" + _table(["Error Type", "Count"], rows)


_POPULATION_DISPLAY = {
    "all": "Type1",
    "final_answer_correct": "Type2",
    "false_positive": "Type3",
}


def render_length_table(
    rows_by_benchmark: dict[str, list[LengthRow]], *, title: str = "Solution Lengths"
) -> str:
    """One row per (benchmark, population) with Avg./Max./Min. columns."""
    body = []
    for benchmark, rows in rows_by_benchmark.items():
        for row in rows:
            body.append(
                [
                    benchmark,
                    _POPULATION_DISPLAY.get(row.population, row.population),
                    format_length(row.avg),
                    EMPTY_CELL if row.max is None else str(row.max),
                    EMPTY_CELL if row.min is None else str(row.min),
                ]
            )
    return f"## {title}\n\n" + _table(
        ["Benchmark", "Sol. Type", "Avg. Len.", "Max. Len.", "Min. Len."], body
    )


def render_curves_markdown(points: Sequence[CurvePoint], *, title: str = "Scaling Curves") -> str:
    with_manual = any(p.manual_accuracy is not None for p in points)
    header = ["Method", "N", "Automatic Accuracy"] + (["Manual Accuracy"] if with_manual else [])
    rows = []
    for p in points:
        row = [p.method.value, str(p.n), format_rate(p.automatic_accuracy)]
        if with_manual:
            row.append(EMPTY_CELL if p.manual_accuracy is None else format_rate(p.manual_accuracy))
        rows.append(row)
    return f"## {title}\n\n" + _table(header, rows)


def curves_to_csv(points: Sequence[CurvePoint]) -> str:
    with_manual = any(p.manual_accuracy is not None for p in points)
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["method", "N", "automatic_accuracy"] + (["manual_accuracy"] if with_manual else [])
    writer.writerow(header)
    for p in points:
        row = [p.method.value, p.n, f"{p.automatic_accuracy:.6f}"]
        if with_manual:
            row.append("" if p.manual_accuracy is None else f"{p.manual_accuracy:.6f}")
        writer.writerow(row)
    return buf.getvalue()


def write_curves_csv(points: Sequence[CurvePoint], path: str | Path) -> None:
    Path(path).write_text(curves_to_csv(points), encoding="utf-8")
