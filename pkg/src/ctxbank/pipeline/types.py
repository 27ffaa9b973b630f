from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from ..lmm.parsing import BoundingBox
from ..segments import segment_from_dict, segment_to_dict


class Task(str, Enum):
    PerID = "PerID"
    PerRel = "PerRel"
    ObjID = "ObjID"
    ObjDet = "ObjDet"
    BehErr = "BehErr"
    BehQA = "BehQA"
    EgoID = "EgoID"

    @property
    def axis(self) -> str:
        return _AXIS[self]

    @property
    def answer_kind(self) -> str:
        if self in (Task.PerRel, Task.BehQA):
            return "mcq"
        if self is Task.ObjDet:
            return "bbox"
        return "binary"


_AXIS = {
    Task.PerID: "persons",
    Task.PerRel: "persons",
    Task.ObjID: "objects",
    Task.ObjDet: "objects",
    Task.BehErr: "behavior",
    Task.BehQA: "behavior",
    Task.EgoID: "egoid",
}

# report column order
TASK_ORDER = (Task.PerID, Task.PerRel, Task.ObjID, Task.ObjDet, Task.BehErr, Task.BehQA, Task.EgoID)


class Modality(str, Enum):
    IMAGE = "image"
    VIDEO = "video"


@dataclass(frozen=True)
class ContextItem:
    item_id: str
    clip_id: str
    modality: Modality
    declaration: str
    subject: str | None = None

    def __post_init__(self) -> None:
        if not self.declaration.strip():
            raise ValueError(f"{self.item_id}: declaration must be nonempty")


@dataclass(frozen=True)
class QueryInstance:
    instance_id: str
    task: Task
    question: str
    query_clip: str
    query_modality: Modality
    context: tuple[ContextItem, ...]
    gold: Union[str, BoundingBox]
    options: tuple[str, ...] | None = None
    subset: str | None = None
    subject: str | None = None
    owner_id: str | None = None

    def gold_text(self) -> str:
        return self.gold.to_text() if isinstance(self.gold, BoundingBox) else self.gold


class BankMode(str, Enum):
    DESCRIPTORS_ONLY = "descriptors-only"
    ALL_EVIDENCE = "all-evidence"
    ADAPTIVE = "adaptive"


class RegimeKind(str, Enum):
    NO_CONTEXT = "no-context"
    LANGUAGE_CTX = "language-ctx"
    VISUAL_CTX = "visual-ctx"
    BANK = "bank"


MAX = "max"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    k: int | str | None = None  # 1 or MAX for context regimes
    mode: BankMode | None = None

    def __post_init__(self) -> None:
        if self.kind in (RegimeKind.LANGUAGE_CTX, RegimeKind.VISUAL_CTX):
            if self.k not in (1, MAX):
                raise ValueError(f"{self.kind.value} needs k of 1 or max, got {self.k!r}")
        elif self.k is not None:
            raise ValueError(f"{self.kind.value} takes no k")
        if (self.kind is RegimeKind.BANK) != (self.mode is not None):
            raise ValueError("bank regimes and only bank regimes carry a mode")

    @classmethod
    def parse(cls, text: str) -> Regime:
        """Parse ``no-context``, ``language-ctx:1``, ``visual-ctx:max``, ``bank:adaptive`` ..."""
        head, _, arg = text.strip().lower().partition(":")
        try:
            kind = RegimeKind(head)
        except ValueError:
            raise ValueError(f"unknown regime {text!r}") from None
        if kind is RegimeKind.NO_CONTEXT:
            if arg:
                raise ValueError(f"no-context takes no argument: {text!r}")
            return cls(kind)
        if kind is RegimeKind.BANK:
            return cls(kind, mode=BankMode(arg or "adaptive"))
        if arg not in ("1", MAX):
            raise ValueError(f"{head} needs :1 or :max, got {text!r}")
        return cls(kind, k=1 if arg == "1" else MAX)

    def __str__(self) -> str:
        if self.kind is RegimeKind.NO_CONTEXT:
            return self.kind.value
        if self.kind is RegimeKind.BANK:
            return f"bank:{self.mode.value}"
        return f"{self.kind.value}:{self.k}"

    def truncate(self, items: tuple[ContextItem, ...]) -> tuple[ContextItem, ...]:
        # k=1 uses the first item in manifest order
        return items[:1] if self.k == 1 else items


FIVE_REGIMES = tuple(
    Regime.parse(r) for r in ("no-context", "language-ctx:1", "language-ctx:max", "visual-ctx:1", "visual-ctx:max")
)


@dataclass
class CallRecord:
    purpose: str
    segments: list
    prompt_key: str
    response: str


@dataclass
class QueryTrace:
    instance_id: str
    task: str
    regime: str
    model: str
    template_set: str
    calls: list[CallRecord] = field(default_factory=list)
    requested_ids: list[str] = field(default_factory=list)
    decisive_ids: list[str] = field(default_factory=list)
    entry_types: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def n_calls(self) -> int:
        return len(self.calls)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "task": self.task,
            "regime": self.regime,
            "model": self.model,
            "template_set": self.template_set,
            "calls": [
                {
                    "purpose": c.purpose,
                    "prompt_key": c.prompt_key,
                    "segments": [segment_to_dict(s) for s in c.segments],
                    "response": c.response,
                }
                for c in self.calls
            ],
            "requested_ids": self.requested_ids,
            "decisive_ids": self.decisive_ids,
            "entry_types": self.entry_types,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> QueryTrace:
        return cls(
            instance_id=d["instance_id"],
            task=d["task"],
            regime=d["regime"],
            model=d["model"],
            template_set=d["template_set"],
            calls=[
                CallRecord(c["purpose"], [segment_from_dict(s) for s in c["segments"]], c["prompt_key"], c["response"])
                for c in d["calls"]
            ],
            requested_ids=list(d["requested_ids"]),
            decisive_ids=list(d["decisive_ids"]),
            entry_types=dict(d["entry_types"]),
            notes=list(d.get("notes", [])),
        )


@dataclass
class QueryResult:
    raw: str
    parsed: Union[str, BoundingBox, None]
    invalid: bool
    trace: QueryTrace

    @property
    def answer(self) -> str:
        if self.parsed is None:
            return self.raw
        return self.parsed.to_text() if isinstance(self.parsed, BoundingBox) else self.parsed
