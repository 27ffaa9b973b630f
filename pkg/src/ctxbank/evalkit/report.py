"""Scoring prediction records and rendering the per-task accuracy table."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from ..lmm.parsing import BoundingBox
from ..pipeline.types import TASK_ORDER, Task
from .metrics import (
    acc_at_iou_exact,
    egoid_score_exact,
    format_percent,
    macro_accuracy_exact,
    mcq_accuracy_exact,
)
from .records import PredictionRecord, records_csv

BLANK = "—"
METRIC_NAME = {"binary": "macro accuracy", "mcq": "accuracy", "bbox": "Acc@IoU>=0.5"}


@dataclass(frozen=True)
class TaskScore:
    task: Task
    metric: str
    value: Fraction  # fraction of 1
    support: dict[str, int]

    @property
    def percent(self) -> float:
        return float(self.value * 100)


def score_task(task: Task, records: Sequence[PredictionRecord]) -> TaskScore:
    golds = [r.gold for r in records]
    invalid = [r.invalid for r in records]
    kind = task.answer_kind
    if kind == "bbox":
        preds = [BoundingBox.from_text(r.pred) if r.pred and not r.invalid else None for r in records]
        value = acc_at_iou_exact(preds, [BoundingBox.from_text(g) for g in golds])
        support = {"all": len(records)}
    elif kind == "mcq":
        value = mcq_accuracy_exact([r.pred for r in records], golds, invalid)
        support = {opt: golds.count(opt) for opt in sorted(set(golds))}
    elif task is Task.EgoID:
        subsets = [r.subset or "" for r in records]
        value = egoid_score_exact([r.pred for r in records], golds, subsets, invalid)
        support = {"Yes": golds.count("Yes"), "No": golds.count("No")}
    else:
        value = macro_accuracy_exact([r.pred for r in records], golds, invalid)
        support = {"Yes": golds.count("Yes"), "No": golds.count("No")}
    return TaskScore(task, METRIC_NAME[kind], value, support)


def score_records(records: Sequence[PredictionRecord]) -> dict[tuple[str, str], dict[Task, TaskScore]]:
    """Scores per (model, regime) row; rows keep first-appearance order."""
    groups: dict[tuple[str, str], dict[Task, list[PredictionRecord]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        groups[(r.model, r.regime)][r.task].append(r)
    return {row: {task: score_task(task, recs) for task, recs in by_task.items()} for row, by_task in groups.items()}


def render_table(scores: dict[tuple[str, str], dict[Task, TaskScore]]) -> str:
    header = ["Model", "Regime", *(t.value for t in TASK_ORDER)]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join(["---", "---"] + ["---:"] * len(TASK_ORDER)) + "|",
    ]
    for (model, regime), by_task in scores.items():
        cells = [format_percent(by_task[t].value) if t in by_task else BLANK for t in TASK_ORDER]
        lines.append("| " + " | ".join([model, regime, *cells]) + " |")
    return "\n".join(lines) + "\n"


def render_report(records: Sequence[PredictionRecord], stats_sections: Sequence[str] = ()) -> str:
    if not records:
        raise ValueError("cannot report on zero prediction records")
    parts = ["# Per-task accuracy (%)\n", render_table(score_records(records))]
    parts.extend(stats_sections)
    return "\n".join(parts)


def emit_report(
    records: Sequence[PredictionRecord], out_dir: str | Path, stats_sections: Sequence[str] = ()
) -> tuple[Path, Path]:
    """Write ``report.md`` and ``predictions.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = out / "report.md"
    report.write_text(render_report(records, stats_sections), encoding="utf-8")
    csv_path = out / "predictions.csv"
    csv_path.write_text(records_csv(records), encoding="utf-8")
    return report, csv_path
