"""Construction logs and the description cache shared by the pipeline."""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class DecisionLog:
    candidate_id: str
    memory_type: str
    kind: str  # decision actually applied
    proposed: str  # decision the model proposed
    target_entry_id: str | None = None
    new_entry_id: str | None = None


@dataclass
class ItemLog:
    item_id: str
    clip_id: str
    n_candidates: int = 0
    calls: int = 0
    warnings: list[str] = field(default_factory=list)
    decisions: list[DecisionLog] = field(default_factory=list)


@dataclass
class ConstructionLog:
    owner_id: str
    preset: str
    model: str
    template_set: str
    items: list[ItemLog] = field(default_factory=list)

    @property
    def n_candidates(self) -> int:
        return sum(i.n_candidates for i in self.items)

    def decisions(self) -> list[DecisionLog]:
        return [d for i in self.items for d in i.decisions]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ConstructionLog:
        items = [
            ItemLog(
                item_id=i["item_id"],
                clip_id=i["clip_id"],
                n_candidates=i["n_candidates"],
                calls=i.get("calls", 0),
                warnings=list(i.get("warnings", [])),
                decisions=[DecisionLog(**x) for x in i["decisions"]],
            )
            for i in d["items"]
        ]
        return cls(d["owner_id"], d["preset"], d["model"], d["template_set"], items)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> ConstructionLog:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class DescriptionCache:
    """Per-item descriptions keyed by (item key, model name)."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._data: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self._data = json.loads(self.path.read_text(encoding="utf-8"))

    @staticmethod
    def _key(item_key: str, model: str) -> str:
        return f"{model}::{item_key}"

    def get(self, item_key: str, model: str) -> str | None:
        return self._data.get(self._key(item_key, model))

    def put(self, item_key: str, model: str, text: str) -> None:
        with self._lock:
            self._data[self._key(item_key, model)] = text

    def __len__(self) -> int:
        return len(self._data)

    def save(self) -> None:
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self._data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
