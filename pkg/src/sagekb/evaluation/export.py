"""Deterministic exports: record CSV, aggregate CSV, JSON bundle, and grouped
bar charts with error bars."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

from .dataset import DIFFICULTIES
from .runner import METRICS, MODE_ORDER, AggregateCell, EvalRecord

RECORD_COLUMNS = (
    "query_text",
    "difficulty",
    "occurrence",
    "index_mode",
    "answer",
    "context_digest",
    "correctness",
    "relevance",
    "faithfulness",
    "statement_total",
    "statement_verified",
    "error",
)

CELL_COLUMNS = ("difficulty", "occurrence", "index_mode", "metric", "mean", "stddev", "n")


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(records: list[EvalRecord], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for record in records:
            writer.writerow([_format(getattr(record, col)) for col in RECORD_COLUMNS])
    return path


def write_aggregates_csv(cells: list[AggregateCell], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CELL_COLUMNS)
        for cell in cells:
            writer.writerow([_format(getattr(cell, col)) for col in CELL_COLUMNS])
    return path


def write_bundle_json(records: list[EvalRecord], cells: list[AggregateCell], path: str | Path) -> Path:
    path = Path(path)
    payload = {
        "records": [asdict(r) for r in records],
        "aggregates": [asdict(c) for c in cells],
    }
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
    return path


def plot_metric_bars(cells: list[AggregateCell], out_dir: str | Path) -> list[Path]:
    """One grouped bar chart per metric: difficulty groups on the x-axis, one
    bar per index mode, population-stddev error bars."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_key = {(c.difficulty, c.index_mode, c.metric): c for c in cells if c.occurrence == "all"}
    written = []
    for metric in METRICS:
        fig, ax = plt.subplots(figsize=(7, 4))
        width = 0.25
        for mode_pos, mode in enumerate(MODE_ORDER):
            xs, means, errs = [], [], []
            for diff_pos, difficulty in enumerate(DIFFICULTIES):
                cell = by_key.get((difficulty, mode, metric))
                if cell is None:
                    continue
                xs.append(diff_pos + (mode_pos - 1) * width)
                means.append(cell.mean)
                errs.append(cell.stddev)
            if xs:
                ax.bar(xs, means, width=width, yerr=errs, capsize=3, label=f"{mode} index")
        ax.set_xticks(range(len(DIFFICULTIES)))
        ax.set_xticklabels([d.capitalize() for d in DIFFICULTIES])
        ax.set_ylabel(metric.capitalize())
        ax.set_title(f"{metric.capitalize()} by query difficulty")
        ax.legend()
        fig.tight_layout()
        out = out_dir / f"{metric}.png"
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)
    return written
