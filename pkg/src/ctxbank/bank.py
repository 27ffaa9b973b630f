"""Evidence-linked memory bank: data model, merge state machine, and views.

A bank is an immutable snapshot. Every operation returns a new ``Bank``;
entries that an operation does not touch are carried over as the very same
objects.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Literal, Union

from ._spacing import uniform_indices
from .errors import MalformedDecision, TypeMismatch, UnknownRequestedId, UnknownTarget
from .segments import MediaSegment, PromptSegment, TextSegment


class MemoryType(str, Enum):
    APPEARANCE = "appearance"
    OWNED_OBJECTS = "owned_objects"
    BEHAVIOR = "behavior"

    @property
    def is_static(self) -> bool:
        return self is not MemoryType.BEHAVIOR

    @property
    def heading(self) -> str:
        return _HEADINGS[self]


_HEADINGS = {
    MemoryType.APPEARANCE: "Appearance",
    MemoryType.OWNED_OBJECTS: "Owned objects",
    MemoryType.BEHAVIOR: "Behavior",
}

CATEGORY_ORDER = (MemoryType.APPEARANCE, MemoryType.OWNED_OBJECTS, MemoryType.BEHAVIOR)


@dataclass(frozen=True)
class FrameEvidence:
    clip_id: str
    frame_index: int

    def __post_init__(self) -> None:
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")


@dataclass(frozen=True)
class SpanEvidence:
    clip_id: str
    start_frame: int
    end_frame: int

    def __post_init__(self) -> None:
        if self.start_frame < 0 or self.end_frame < self.start_frame:
            raise ValueError(f"invalid span [{self.start_frame}, {self.end_frame}]")

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame + 1


Evidence = Union[FrameEvidence, SpanEvidence]


def check_evidence_type(memory_type: MemoryType, evidence: Evidence) -> None:
    """Static memories anchor to a frame, behavior to a span."""
    want = FrameEvidence if memory_type.is_static else SpanEvidence
    if not isinstance(evidence, want):
        raise TypeMismatch(f"{memory_type.value} requires {want.__name__}, got {type(evidence).__name__}")


def evidence_to_dict(ev: Evidence) -> dict:
    if isinstance(ev, FrameEvidence):
        return {"kind": "frame", "clip_id": ev.clip_id, "frame_index": ev.frame_index}
    return {"kind": "span", "clip_id": ev.clip_id, "start_frame": ev.start_frame, "end_frame": ev.end_frame}


def evidence_from_dict(d: dict) -> Evidence:
    if d["kind"] == "frame":
        return FrameEvidence(d["clip_id"], int(d["frame_index"]))
    if d["kind"] == "span":
        return SpanEvidence(d["clip_id"], int(d["start_frame"]), int(d["end_frame"]))
    raise ValueError(f"unknown evidence kind {d['kind']!r}")


def evidence_frames(ev: Evidence, span_frames: int) -> list[int]:
    """Frame indices used to show one piece of evidence to the model."""
    if isinstance(ev, FrameEvidence):
        return [ev.frame_index]
    return uniform_indices(ev.start_frame, ev.end_frame, min(span_frames, ev.length))


@dataclass(frozen=True)
class CandidateCue:
    candidate_id: str
    memory_type: MemoryType
    descriptor: str
    anchor: Evidence

    def __post_init__(self) -> None:
        if not self.descriptor.strip():
            raise ValueError("descriptor must be nonempty")
        check_evidence_type(self.memory_type, self.anchor)


class EntryStatus(str, Enum):
    ACTIVE = "active"
    RETRACTED = "retracted"


class DecisionKind(str, Enum):
    ADD = "ADD"
    CONFIRM = "CONFIRM"
    REVISE = "REVISE"
    RETRACT = "RETRACT"
    DROP = "DROP"

    @property
    def needs_target(self) -> bool:
        return self in (DecisionKind.CONFIRM, DecisionKind.REVISE, DecisionKind.RETRACT)


@dataclass(frozen=True)
class HistoryRecord:
    op: DecisionKind
    candidate_id: str
    prior_descriptor: str | None = None

    def to_dict(self) -> dict:
        return {"op": self.op.value, "candidate_id": self.candidate_id, "prior_descriptor": self.prior_descriptor}

    @classmethod
    def from_dict(cls, d: dict) -> HistoryRecord:
        return cls(DecisionKind(d["op"]), d["candidate_id"], d.get("prior_descriptor"))


@dataclass(frozen=True)
class BankEntry:
    entry_id: str
    memory_type: MemoryType
    descriptor: str
    evidence: tuple[Evidence, ...]
    support_count: int = 1
    status: EntryStatus = EntryStatus.ACTIVE
    history: tuple[HistoryRecord, ...] = ()

    @property
    def is_active(self) -> bool:
        return self.status is EntryStatus.ACTIVE

    @property
    def was_updated(self) -> bool:
        """True once the entry has been confirmed or revised after creation."""
        return any(h.op in (DecisionKind.CONFIRM, DecisionKind.REVISE) for h in self.history)

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "memory_type": self.memory_type.value,
            "descriptor": self.descriptor,
            "evidence": [evidence_to_dict(e) for e in self.evidence],
            "support_count": self.support_count,
            "status": self.status.value,
            "history": [h.to_dict() for h in self.history],
        }

    @classmethod
    def from_dict(cls, d: dict) -> BankEntry:
        return cls(
            entry_id=d["entry_id"],
            memory_type=MemoryType(d["memory_type"]),
            descriptor=d["descriptor"],
            evidence=tuple(evidence_from_dict(e) for e in d["evidence"]),
            support_count=int(d["support_count"]),
            status=EntryStatus(d["status"]),
            history=tuple(HistoryRecord.from_dict(h) for h in d["history"]),
        )


@dataclass(frozen=True)
class Bank:
    owner_id: str
    entries: tuple[BankEntry, ...] = ()
    next_candidate_seq: int = 1
    next_entry_seq: int = 1

    def get(self, entry_id: str) -> BankEntry | None:
        for e in self.entries:
            if e.entry_id == entry_id:
                return e
        return None

    def active_entries(self, memory_type: MemoryType | None = None) -> list[BankEntry]:
        return [
            e for e in self.entries
            if e.is_active and (memory_type is None or e.memory_type is memory_type)
        ]

    @property
    def active_ids(self) -> list[str]:
        return [e.entry_id for e in self.entries if e.is_active]

    def to_dict(self) -> dict:
        return {
            "owner_id": self.owner_id,
            "next_candidate_seq": self.next_candidate_seq,
            "next_entry_seq": self.next_entry_seq,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Bank:
        return cls(
            owner_id=d["owner_id"],
            entries=tuple(BankEntry.from_dict(e) for e in d["entries"]),
            next_candidate_seq=int(d["next_candidate_seq"]),
            next_entry_seq=int(d["next_entry_seq"]),
        )


@dataclass(frozen=True)
class MergeDecision:
    kind: DecisionKind
    candidate_id: str
    target_entry_id: str | None = None
    revised_descriptor: str | None = None

    def validate(self) -> None:
        if self.kind.needs_target and not self.target_entry_id:
            raise MalformedDecision(f"{self.kind.value} for {self.candidate_id} needs a target entry")
        if not self.kind.needs_target and self.target_entry_id is not None:
            raise MalformedDecision(f"{self.kind.value} for {self.candidate_id} must not carry a target")
        if self.kind is DecisionKind.REVISE:
            if not (self.revised_descriptor and self.revised_descriptor.strip()):
                raise MalformedDecision(f"REVISE for {self.candidate_id} needs a revised descriptor")
        elif self.revised_descriptor is not None:
            raise MalformedDecision(f"{self.kind.value} for {self.candidate_id} must not carry a revised descriptor")


# -- identifiers ------------------------------------------------------------

_PREFIX = {"candidate": "c", "entry": "e"}
_ID_RE = re.compile(r"^([ce])_(\d+)$")


def format_id(prefix: str, seq: int) -> str:
    return f"{prefix}_{seq:03d}"


def id_number(identifier: str) -> int:
    m = _ID_RE.match(identifier)
    if not m:
        raise ValueError(f"not a bank identifier: {identifier!r}")
    return int(m.group(2))


def mint_ids(bank: Bank, kind: Literal["candidate", "entry"], count: int) -> tuple[list[str], Bank]:
    """Issue ``count`` fresh identifiers and return them with the advanced bank."""
    if count < 1:
        raise ValueError("count must be >= 1")
    prefix = _PREFIX[kind]
    if kind == "candidate":
        start = bank.next_candidate_seq
        bank = dataclasses.replace(bank, next_candidate_seq=start + count)
    else:
        start = bank.next_entry_seq
        bank = dataclasses.replace(bank, next_entry_seq=start + count)
    return [format_id(prefix, start + i) for i in range(count)], bank


# -- merge state machine ----------------------------------------------------


def _active_target(bank: Bank, decision: MergeDecision) -> tuple[int, BankEntry]:
    for i, e in enumerate(bank.entries):
        if e.entry_id == decision.target_entry_id:
            if not e.is_active:
                raise UnknownTarget(f"{e.entry_id} is retracted")
            return i, e
    raise UnknownTarget(f"no entry {decision.target_entry_id}")


def _replace_entry(bank: Bank, index: int, entry: BankEntry) -> Bank:
    entries = bank.entries[:index] + (entry,) + bank.entries[index + 1:]
    return dataclasses.replace(bank, entries=entries)


def apply_decision(bank: Bank, decision: MergeDecision, candidate: CandidateCue) -> Bank:
    if decision.candidate_id != candidate.candidate_id:
        raise MalformedDecision(
            f"decision is for {decision.candidate_id}, candidate is {candidate.candidate_id}"
        )
    decision.validate()
    kind = decision.kind

    if kind is DecisionKind.DROP:
        return bank

    if kind is DecisionKind.ADD:
        (entry_id,), bank = mint_ids(bank, "entry", 1)
        entry = BankEntry(
            entry_id=entry_id,
            memory_type=candidate.memory_type,
            descriptor=candidate.descriptor,
            evidence=(candidate.anchor,),
            history=(HistoryRecord(DecisionKind.ADD, candidate.candidate_id),),
        )
        return dataclasses.replace(bank, entries=bank.entries + (entry,))

    index, target = _active_target(bank, decision)
    record = HistoryRecord(kind, candidate.candidate_id)

    if kind is DecisionKind.RETRACT:
        updated = dataclasses.replace(
            target, status=EntryStatus.RETRACTED, history=target.history + (record,)
        )
        return _replace_entry(bank, index, updated)

    if target.memory_type is not candidate.memory_type:
        raise TypeMismatch(
            f"{kind.value} of {target.entry_id} ({target.memory_type.value}) "
            f"by {candidate.candidate_id} ({candidate.memory_type.value})"
        )
    if kind is DecisionKind.CONFIRM:
        updated = dataclasses.replace(
            target,
            support_count=target.support_count + 1,
            evidence=target.evidence + (candidate.anchor,),
            history=target.history + (record,),
        )
    else:  # REVISE
        record = HistoryRecord(kind, candidate.candidate_id, prior_descriptor=target.descriptor)
        updated = dataclasses.replace(
            target,
            descriptor=decision.revised_descriptor,
            evidence=target.evidence + (candidate.anchor,),
            history=target.history + (record,),
        )
    return _replace_entry(bank, index, updated)


def apply_decisions(
    bank: Bank, decisions: Iterable[MergeDecision], candidates: Iterable[CandidateCue]
) -> Bank:
    by_id = {c.candidate_id: c for c in candidates}
    for d in decisions:
        bank = apply_decision(bank, d, by_id[d.candidate_id])
    return bank


# -- views ------------------------------------------------------------------


def entry_line(entry: BankEntry) -> str:
    return f"[{entry.entry_id}] (support {entry.support_count}) {entry.descriptor}\n"


def _view_chunks(bank: Bank) -> list[tuple[str, BankEntry | None]]:
    """Text view as (line, entry) pairs; entry is None for headings and markers."""
    chunks: list[tuple[str, BankEntry | None]] = []
    for mtype in CATEGORY_ORDER:
        chunks.append((f"## {mtype.heading}\n", None))
        active = bank.active_entries(mtype)
        if not active:
            chunks.append(("(none)\n", None))
        for e in active:
            chunks.append((entry_line(e), e))
    return chunks


def render_text_view(bank: Bank) -> str:
    return "".join(line for line, _ in _view_chunks(bank))


def representative_evidence(entry: BankEntry) -> Evidence:
    # The most recent observation backs the current descriptor (REVISE appends last).
    return entry.evidence[-1]


def render_hybrid_view(bank: Bank, requested: Iterable[str], span_frames: int = 4) -> list[PromptSegment]:
    """Text view with media inlined after each requested entry's line."""
    if span_frames < 2:
        raise ValueError("span_frames must be >= 2")
    requested = set(requested)
    unknown = requested - set(bank.active_ids)
    if unknown:
        raise UnknownRequestedId(f"not active in bank: {', '.join(sorted(unknown))}")

    segments: list[PromptSegment] = []
    pending = ""
    for line, entry in _view_chunks(bank):
        pending += line
        if entry is not None and entry.entry_id in requested:
            segments.append(TextSegment(pending))
            pending = ""
            segments.extend(entry_media(entry, span_frames))
    if pending:
        segments.append(TextSegment(pending))
    return segments


def entry_media(entry: BankEntry, span_frames: int) -> list[MediaSegment]:
    ev = representative_evidence(entry)
    return [
        MediaSegment(ev.clip_id, idx, caption=f"{entry.entry_id} evidence: {ev.clip_id} frame {idx}")
        for idx in evidence_frames(ev, span_frames)
    ]
