"""Parsers for the structured output the prompts ask the model to emit.

Grammar summary (also spelled out in the prompt templates):

* extraction: a fenced ``cues`` block, one ``category | descriptor | anchor``
  line per cue, where anchor is ``frame N`` or ``frames A-B``;
* merge: statements ``c_NNN: ADD``, ``c_NNN: CONFIRM e_NNN``,
  ``c_NNN: REVISE e_NNN "new descriptor"``, ``c_NNN: RETRACT e_NNN``,
  ``c_NNN: DROP`` separated by newlines or semicolons;
* revision verification: ``c_NNN: CONFIRM`` / ``c_NNN: WITHDRAW``;
* query time: ``ANSWER: ...`` or ``REQUEST: e_NNN, e_NNN``, optionally
  followed by ``DECISIVE: e_NNN, ...``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

from ..bank import (
    Bank,
    CandidateCue,
    DecisionKind,
    FrameEvidence,
    MemoryType,
    MergeDecision,
    SpanEvidence,
    format_id,
)
from ..errors import DegenerateBox, ParseFailure

_FENCE_RE = re.compile(r"```[ \t]*([A-Za-z_-]*)[^\n]*\n(.*?)```", re.DOTALL)


def fenced_blocks(raw: str) -> list[tuple[str, str]]:
    return [(m.group(1).lower(), m.group(2)) for m in _FENCE_RE.finditer(raw)]


def _has_block(raw: str, label: str) -> bool:
    return any(name == label for name, _ in fenced_blocks(raw))


def _pick_block(raw: str, label: str) -> str | None:
    blocks = fenced_blocks(raw)
    for name, body in blocks:
        if name == label:
            return body
    return blocks[0][1] if blocks else None


# -- extraction -------------------------------------------------------------

_CATEGORY_ALIASES = {
    "appearance": MemoryType.APPEARANCE,
    "owned_objects": MemoryType.OWNED_OBJECTS,
    "owned_object": MemoryType.OWNED_OBJECTS,
    "objects": MemoryType.OWNED_OBJECTS,
    "behavior": MemoryType.BEHAVIOR,
    "behaviour": MemoryType.BEHAVIOR,
    "motion": MemoryType.BEHAVIOR,
}
_FRAME_RE = re.compile(r"^frame\s+(\d+)$", re.IGNORECASE)
_SPAN_RE = re.compile(r"^(?:frames|span)\s+(\d+)\s*(?:-|–|to)\s*(\d+)$", re.IGNORECASE)


def _category(text: str) -> MemoryType | None:
    key = re.sub(r"[\s-]+", "_", text.strip().lower())
    return _CATEGORY_ALIASES.get(key)


def parse_candidates(
    raw: str,
    clip_id: str,
    first_seq: int = 1,
    frame_map: Sequence[int] | None = None,
) -> tuple[list[CandidateCue], list[str]]:
    """Parse an extraction response into candidate cues plus line warnings.

    ``frame_map`` translates the frame labels shown to the model into stored
    frame indices; labels outside it are rejected.
    """
    block = _pick_block(raw, "cues")
    if block is None:
        raise ParseFailure("no fenced cue block in extraction output", raw)

    cues: list[CandidateCue] = []
    warnings: list[str] = []
    seq = first_seq
    for lineno, line in enumerate(block.splitlines(), 1):
        line = line.strip().lstrip("-*").strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split("|")]
        if len(fields) != 3:
            warnings.append(f"line {lineno}: expected 3 fields, got {len(fields)}")
            continue
        cat_text, descriptor, anchor_text = fields
        mtype = _category(cat_text)
        if mtype is None:
            warnings.append(f"line {lineno}: unknown category {cat_text!r}")
            continue
        if not descriptor:
            warnings.append(f"line {lineno}: empty descriptor")
            continue
        try:
            anchor = _anchor(anchor_text, clip_id, frame_map)
        except ValueError as exc:
            warnings.append(f"line {lineno}: {exc}")
            continue
        if isinstance(anchor, SpanEvidence) and mtype.is_static:
            warnings.append(f"line {lineno}: {mtype.value} cue must anchor to a single frame")
            continue
        if isinstance(anchor, FrameEvidence) and not mtype.is_static:
            warnings.append(f"line {lineno}: behavior cue must anchor to a frame span")
            continue
        cues.append(CandidateCue(format_id("c", seq), mtype, descriptor, anchor))
        seq += 1
    return cues, warnings


def _map_label(label: int, frame_map: Sequence[int] | None) -> int:
    if frame_map is None:
        return label
    if not 0 <= label < len(frame_map):
        raise ValueError(f"frame label {label} outside 0..{len(frame_map) - 1}")
    return frame_map[label]


def _anchor(text: str, clip_id: str, frame_map: Sequence[int] | None):
    text = text.strip().rstrip(".")
    m = _FRAME_RE.match(text)
    if m:
        return FrameEvidence(clip_id, _map_label(int(m.group(1)), frame_map))
    m = _SPAN_RE.match(text)
    if m:
        start, end = int(m.group(1)), int(m.group(2))
        if end < start:
            raise ValueError(f"span end {end} before start {start}")
        return SpanEvidence(clip_id, _map_label(start, frame_map), _map_label(end, frame_map))
    raise ValueError(f"unrecognized anchor {text!r}")


def render_candidates(cues: Sequence[CandidateCue]) -> str:
    """Emit a cue block in the grammar ``parse_candidates`` reads."""
    lines = []
    for c in cues:
        if isinstance(c.anchor, FrameEvidence):
            anchor = f"frame {c.anchor.frame_index}"
        else:
            anchor = f"frames {c.anchor.start_frame}-{c.anchor.end_frame}"
        lines.append(f"{c.memory_type.value} | {c.descriptor} | {anchor}")
    return "```cues\n" + "".join(line + "\n" for line in lines) + "```"


# -- merge decisions --------------------------------------------------------

_SPLIT_RE = re.compile(r";(?=(?:[^\"]*\"[^\"]*\")*[^\"]*$)")
_STMT_RE = re.compile(
    r"^[-*\s]*(c_?\d+)\s*[:=]\s*(ADD|CONFIRM|REVISE|RETRACT|DROP)\b\s*(?:(e_?\d+))?\s*(.*)$",
    re.IGNORECASE,
)


def _norm_id(prefix: str, token: str) -> str:
    return format_id(prefix, int(re.sub(r"\D", "", token)))


def _revised_text(rest: str) -> str | None:
    rest = rest.strip()
    rest = re.sub(r"^(?:->|→|:|=)\s*", "", rest)
    m = re.match(r'^"(.*)"$', rest)
    if m:
        rest = m.group(1)
    rest = rest.strip()
    return rest or None


def parse_merge_decisions(
    raw: str, candidates: Sequence[CandidateCue], bank: Bank
) -> tuple[list[MergeDecision], list[str]]:
    """Return exactly one decision per candidate, in candidate order.

    Unmentioned candidates become DROP. Decisions the bank could not accept
    (unknown or retracted target, cross-type CONFIRM/REVISE, missing fields,
    a target retracted earlier in the same batch) are downgraded to DROP with
    a warning, so the result always applies cleanly.
    """
    block = _pick_block(raw, "decisions")
    text = block if block is not None else raw
    found: dict[str, MergeDecision] = {}
    warnings: list[str] = []
    matched = 0
    cand_by_id = {c.candidate_id: c for c in candidates}

    for line in text.splitlines():
        for stmt in _SPLIT_RE.split(line):
            m = _STMT_RE.match(stmt.strip())
            if not m:
                continue
            matched += 1
            cid = _norm_id("c", m.group(1))
            kind = DecisionKind(m.group(2).upper())
            target = _norm_id("e", m.group(3)) if m.group(3) else None
            revised = _revised_text(m.group(4)) if kind is DecisionKind.REVISE else None
            if cid not in cand_by_id:
                warnings.append(f"{cid}: not among the candidates, ignored")
                continue
            if cid in found:
                warnings.append(f"{cid}: repeated decision ignored")
                continue
            if not kind.needs_target:
                target = None
            found[cid] = MergeDecision(kind, cid, target, revised)

    # an explicitly empty decisions block means every candidate is dropped
    if matched == 0 and not _has_block(raw, "decisions"):
        raise ParseFailure("no merge decisions found", raw)

    decisions: list[MergeDecision] = []
    retracted_in_batch: set[str] = set()
    for cand in candidates:
        d = found.get(cand.candidate_id)
        if d is None:
            decisions.append(MergeDecision(DecisionKind.DROP, cand.candidate_id))
            continue
        problem = _check_decision(d, cand, bank, retracted_in_batch)
        if problem:
            warnings.append(f"{cand.candidate_id}: {problem}; dropped")
            decisions.append(MergeDecision(DecisionKind.DROP, cand.candidate_id))
            continue
        if d.kind is DecisionKind.RETRACT:
            retracted_in_batch.add(d.target_entry_id)
        decisions.append(d)
    return decisions, warnings


def _check_decision(d: MergeDecision, cand: CandidateCue, bank: Bank, retracted: set[str]) -> str | None:
    if not d.kind.needs_target:
        return None
    if d.target_entry_id is None:
        return f"{d.kind.value} without a target entry"
    entry = bank.get(d.target_entry_id)
    if entry is None:
        return f"unknown entry {d.target_entry_id}"
    if not entry.is_active or d.target_entry_id in retracted:
        return f"entry {d.target_entry_id} is retracted"
    if d.kind is DecisionKind.REVISE and not d.revised_descriptor:
        return "REVISE without a revised descriptor"
    if d.kind in (DecisionKind.CONFIRM, DecisionKind.REVISE) and entry.memory_type is not cand.memory_type:
        return f"{d.kind.value} across memory types ({cand.memory_type.value} -> {entry.memory_type.value})"
    return None


def render_merge_decisions(decisions: Sequence[MergeDecision]) -> str:
    lines = []
    for d in decisions:
        s = f"{d.candidate_id}: {d.kind.value}"
        if d.target_entry_id:
            s += f" {d.target_entry_id}"
        if d.revised_descriptor:
            s += f' "{d.revised_descriptor}"'
        lines.append(s)
    return "```decisions\n" + "".join(line + "\n" for line in lines) + "```"


_VERDICT_RE = re.compile(r"^[-*\s]*(c_?\d+)\s*[:=]\s*(CONFIRM|CONFIRMED|WITHDRAW|WITHDRAWN)\b", re.IGNORECASE)


def parse_revise_verdicts(raw: str, candidate_ids: Sequence[str]) -> tuple[dict[str, bool], list[str]]:
    """Map each REVISE candidate to True (confirmed) or False (withdrawn)."""
    block = _pick_block(raw, "verification")
    text = block if block is not None else raw
    verdicts: dict[str, bool] = {}
    warnings: list[str] = []
    matched = 0
    for line in text.splitlines():
        for stmt in line.split(";"):
            m = _VERDICT_RE.match(stmt.strip())
            if not m:
                continue
            matched += 1
            cid = _norm_id("c", m.group(1))
            if cid in candidate_ids and cid not in verdicts:
                verdicts[cid] = m.group(2).upper().startswith("CONFIRM")
    if matched == 0 and not _has_block(raw, "verification"):
        raise ParseFailure("no revision verdicts found", raw)
    for cid in candidate_ids:
        if cid not in verdicts:
            warnings.append(f"{cid}: no verdict, treated as withdrawn")
            verdicts[cid] = False
    return verdicts, warnings


# -- query time -------------------------------------------------------------


@dataclass(frozen=True)
class Answer:
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip() or "\n" in self.text:
            raise ValueError("answer text must be a nonempty single line")


@dataclass(frozen=True)
class Request:
    entry_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.entry_ids:
            raise ValueError("request must name at least one entry")
        if len(set(self.entry_ids)) != len(self.entry_ids):
            raise ValueError("request entry ids must be unique")


TriageOutcome = Union[Answer, Request]

_MARKER_RE = re.compile(r"^[\s*#>]*(ANSWER|REQUEST)\s*\**\s*:\s*\**(.*)$", re.IGNORECASE | re.MULTILINE)
_ENTRY_RE = re.compile(r"\be_?(\d+)\b", re.IGNORECASE)
_DECISIVE_RE = re.compile(r"^[\s*#>]*DECISIVE\s*\**\s*:\s*\**(.*)$", re.IGNORECASE | re.MULTILINE)


def entry_ids_in(text: str) -> list[str]:
    out: list[str] = []
    for m in _ENTRY_RE.finditer(text):
        eid = format_id("e", int(m.group(1)))
        if eid not in out:
            out.append(eid)
    return out


def parse_triage(raw: str) -> TriageOutcome:
    for m in _MARKER_RE.finditer(raw):
        marker, rest = m.group(1).upper(), m.group(2).strip().strip("*").strip()
        if marker == "ANSWER":
            if rest:
                return Answer(rest)
        else:
            ids = entry_ids_in(rest)
            if ids:
                return Request(tuple(ids))
    raise ParseFailure("neither ANSWER: nor REQUEST: marker found", raw)


def render_triage(outcome: TriageOutcome) -> str:
    if isinstance(outcome, Answer):
        return f"ANSWER: {outcome.text}"
    return "REQUEST: " + ", ".join(outcome.entry_ids)


def parse_decisive(raw: str) -> list[str]:
    """Entry IDs the model reported as decisive; empty when none reported."""
    m = _DECISIVE_RE.search(raw)
    return entry_ids_in(m.group(1)) if m else []


def _answer_text(raw: str) -> str:
    for m in _MARKER_RE.finditer(raw):
        if m.group(1).upper() == "ANSWER" and m.group(2).strip():
            return m.group(2).strip()
    return raw


def parse_binary(raw: str) -> str:
    m = re.search(r"\b(yes|no)\b", _answer_text(raw), re.IGNORECASE)
    if not m:
        raise ParseFailure("no Yes/No answer found", raw)
    return m.group(1).capitalize()


def parse_option(raw: str, letters: str = "ABCD") -> str:
    text = _answer_text(raw).strip()
    cls = f"[{letters}]"
    # a bare letter may be lowercase; inside prose only capitals count, since "a" is a word
    bare = re.fullmatch(rf"[\s*(\[]*({cls})[).:\]\s*]*", text, re.IGNORECASE)
    if bare:
        return bare.group(1).upper()
    m = re.match(rf"^[\s*(\[]*({cls})(?:[).:\]\s*]|$)", text)
    if not m:
        m = re.search(rf"\b(?:answer|option|choice)\s*(?:is|:)?\s*\(?({cls})\b", text, re.IGNORECASE)
    if not m:
        raise ParseFailure("no option letter found", raw)
    return m.group(1).upper()


# -- bounding boxes ---------------------------------------------------------


@dataclass(frozen=True)
class BoundingBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box {self}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def to_text(self) -> str:
        return " ".join(f"{v:g}" for v in self.as_tuple())

    @classmethod
    def from_text(cls, text: str) -> BoundingBox:
        vals = [float(v) for v in text.replace(",", " ").split()]
        return cls(*vals)


_NUM = r"-?(?:\d+(?:\.\d*)?|\.\d+)"
_TUPLE_RE = re.compile(rf"[\[(]\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*[\])]")
_NUM_RE = re.compile(_NUM)


def parse_bbox(raw: str, image_width: float, image_height: float) -> BoundingBox:
    if image_width < 1 or image_height < 1:
        raise ValueError("image size must be at least 1x1")
    m = _TUPLE_RE.search(raw)
    if m:
        vals = [float(g) for g in m.groups()]
    else:
        vals = [float(v) for v in _NUM_RE.findall(raw)[:4]]
    if len(vals) < 4:
        raise ParseFailure("fewer than four coordinates", raw)
    if all(v <= 1.0 for v in vals):
        vals = [vals[0] * image_width, vals[1] * image_height, vals[2] * image_width, vals[3] * image_height]
    xa, xb = sorted(min(max(v, 0.0), float(image_width)) for v in (vals[0], vals[2]))
    ya, yb = sorted(min(max(v, 0.0), float(image_height)) for v in (vals[1], vals[3]))
    if xa == xb or ya == yb:
        raise DegenerateBox("box has zero area after clamping", raw)
    return BoundingBox(xa, ya, xb, yb)
