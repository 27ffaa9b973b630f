"""Per-instance prediction records and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..pipeline.types import QueryInstance, QueryResult, Task

CSV_COLUMNS = (
    "instance_id",
    "task",
    "regime",
    "model",
    "subset",
    "gold",
    "pred",
    "invalid",
    "calls",
    "requested",
    "decisive",
)


@dataclass(frozen=True)
class PredictionRecord:
    instance_id: str
    task: Task
    regime: str
    model: str
    gold: str
    pred: str | None
    invalid: bool = False
    calls: int = 1
    requested: tuple[str, ...] = ()
    decisive: tuple[str, ...] = ()
    subset: str | None = None

    def __post_init__(self) -> None:
        if self.invalid and self.task.answer_kind == "mcq" and self.pred is not None:
            raise ValueError(f"{self.instance_id}: invalid MCQ record must carry no parsed answer")

    @classmethod
    def from_result(cls, q: QueryInstance, regime: str, result: QueryResult) -> PredictionRecord:
        t = result.trace
        return cls(
            instance_id=q.instance_id,
            task=q.task,
            regime=regime,
            model=t.model,
            gold=q.gold_text(),
            pred=None if result.parsed is None else result.answer,
            invalid=result.invalid,
            calls=t.n_calls,
            requested=tuple(t.requested_ids),
            decisive=tuple(t.decisive_ids),
            subset=q.subset,
        )

    def to_row(self) -> dict[str, str]:
        return {
            "instance_id": self.instance_id,
            "task": self.task.value,
            "regime": self.regime,
            "model": self.model,
            "subset": self.subset or "",
            "gold": self.gold,
            "pred": "" if self.pred is None else self.pred,
            "invalid": "true" if self.invalid else "false",
            "calls": str(self.calls),
            "requested": " ".join(self.requested),
            "decisive": " ".join(self.decisive),
        }

    @classmethod
    def from_row(cls, row: dict[str, str]) -> PredictionRecord:
        if row.get("invalid") not in ("true", "false"):
            raise ValueError(f"{row.get('instance_id')}: invalid column must be true or false")
        return cls(
            instance_id=row["instance_id"],
            task=Task(row["task"]),
            regime=row["regime"],
            model=row["model"],
            gold=row["gold"],
            pred=row["pred"] or None,
            invalid=row["invalid"] == "true",
            calls=int(row["calls"]),
            requested=tuple(row["requested"].split()),
            decisive=tuple(row["decisive"].split()),
            subset=row["subset"] or None,
        )


def records_csv(records: Iterable[PredictionRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(r.to_row())
    return buf.getvalue()


def write_records(path: str | Path, records: Sequence[PredictionRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(records_csv(records), encoding="utf-8")
    return path


def read_records(path: str | Path) -> list[PredictionRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        return [PredictionRecord.from_row(row) for row in reader]
