"""Agentic context bank pipeline and the context-prompting baselines.

``ContextBankPipeline`` ties a backend, a media store and a template set
together. Stage I (``build_bank`` and friends) only ever sees context items;
Stage II (``answer_query``) answers one query against a finished bank.
"""

from __future__ import annotations

import hashlib
import logging
import threading
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

from ..bank import (
    CATEGORY_ORDER,
    Bank,
    BankEntry,
    CandidateCue,
    DecisionKind,
    FrameEvidence,
    MemoryType,
    MergeDecision,
    SpanEvidence,
    apply_decision,
    entry_line,
    entry_media,
    evidence_frames,
    mint_ids,
    render_hybrid_view,
    render_text_view,
)
from ..errors import ConstructionError, ParseFailure
from ..lmm.backends import Backend
from ..lmm.parsing import (
    Answer,
    BoundingBox,
    Request,
    parse_bbox,
    parse_binary,
    parse_candidates,
    parse_decisive,
    parse_merge_decisions,
    parse_option,
    parse_revise_verdicts,
    parse_triage,
)
from ..media import MediaStore
from ..segments import MediaSegment, PromptSegment, TextSegment, canonical_hash
from .construction import ConstructionLog, DecisionLog, DescriptionCache, ItemLog
from .templates import TemplateSet
from .types import (
    BankMode,
    CallRecord,
    ContextItem,
    Modality,
    QueryInstance,
    QueryResult,
    QueryTrace,
    Regime,
    RegimeKind,
    Task,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

SLOT = {"persons": "person", "objects": "object", "behavior": "step", "egoid": "action"}
ANSWER_SHAPE = {
    "binary": "Yes or No",
    "mcq": "<letter>, where the letter is one of A, B, C, D",
    "bbox": "[x1, y1, x2, y2] giving the box in pixel coordinates of the query image",
}
WITHDRAW_FALLBACKS = (DecisionKind.ADD, DecisionKind.CONFIRM, DecisionKind.DROP)


@dataclass
class PipelineConfig:
    span_frames: int = 4
    revise_fallback: DecisionKind = DecisionKind.ADD
    sample_frames: int = 16

    def __post_init__(self) -> None:
        if self.span_frames < 2:
            raise ValueError("span_frames must be >= 2")
        if isinstance(self.revise_fallback, str):
            self.revise_fallback = DecisionKind(self.revise_fallback.upper())
        if self.revise_fallback not in WITHDRAW_FALLBACKS:
            raise ValueError(f"revise fallback must be one of ADD, CONFIRM, DROP, got {self.revise_fallback}")


def _preset_for(task: Task) -> str:
    return {"egoid": "wearer", "behavior": "phases"}.get(task.axis, "descriptions")


def default_owner(task: Task, items: Sequence[ContextItem]) -> str:
    digest = hashlib.sha256("\n".join(i.item_id for i in items).encode("utf-8")).hexdigest()[:10]
    return f"{_preset_for(task)}-{digest}"


class ContextBankPipeline:
    def __init__(
        self,
        backend: Backend,
        store: MediaStore,
        templates: TemplateSet | None = None,
        config: PipelineConfig | None = None,
        descriptions: DescriptionCache | None = None,
    ):
        self.backend = backend
        self.store = store
        self.templates = templates or TemplateSet.builtin()
        self.config = config or PipelineConfig()
        self.descriptions = descriptions or DescriptionCache()
        self._banks: dict[tuple, tuple[Bank, ConstructionLog]] = {}
        self._failed: dict[tuple, Exception] = {}
        self._bank_lock = threading.Lock()

    # -- plumbing -------------------------------------------------------------

    def _call(self, segments: list[PromptSegment], purpose: str, trace: QueryTrace | None = None) -> str:
        raw = self.backend.complete(segments, deterministic=True)
        if trace is not None:
            trace.calls.append(CallRecord(purpose, list(segments), canonical_hash(segments), raw))
        return raw

    def _ask(
        self,
        segments: list[PromptSegment],
        parse: Callable[[str], T],
        reminder: str,
        purpose: str,
        log: ItemLog | None = None,
    ) -> T:
        """Call and parse; on a parse failure retry once with a format reminder."""
        raw = self._call(segments, purpose)
        if log is not None:
            log.calls += 1
        try:
            return parse(raw)
        except ParseFailure as first:
            logger.info("%s: unparseable reply (%s); retrying once", purpose, first)
            if log is not None:
                log.warnings.append(f"{purpose}: retried after unparseable reply")
        retry = segments + self.templates.render(reminder)
        raw = self._call(retry, purpose + ":retry")
        if log is not None:
            log.calls += 1
        return parse(raw)

    def _frames(self, clip_id: str, label: str) -> tuple[list[int], list[MediaSegment]]:
        idx = self.store.sampled(clip_id, self.config.sample_frames)
        return idx, [MediaSegment(clip_id, i, caption=f"{label} {n}") for n, i in enumerate(idx)]

    def _query_media(self, q: QueryInstance) -> list[MediaSegment]:
        return self._frames(q.query_clip, "query frame")[1]

    def _item_media(self, item: ContextItem) -> list[MediaSegment]:
        return self._frames(item.clip_id, f"{item.item_id} frame")[1]

    def _anchor_media(self, cue: CandidateCue) -> list[MediaSegment]:
        return [
            MediaSegment(cue.anchor.clip_id, i, caption=f"{cue.candidate_id} evidence: {cue.anchor.clip_id} frame {i}")
            for i in evidence_frames(cue.anchor, self.config.span_frames)
        ]

    # -- stage I --------------------------------------------------------------

    def extract_cues(
        self, item: ContextItem, bank: Bank, preset: str = "wearer", log: ItemLog | None = None
    ) -> tuple[list[CandidateCue], Bank]:
        """Extract candidate cues from one context item; IDs come from the bank counter."""
        frame_map, frames = self._frames(item.clip_id, "frame")
        if preset == "phases":
            prompt = self.templates.render("extract_phases", step=_subject(item), N=len(frames), frames=frames)
        else:
            prompt = self.templates.render("extract", N=len(frames), frames=frames)

        def parse(raw: str):
            return parse_candidates(raw, item.clip_id, first_seq=bank.next_candidate_seq, frame_map=frame_map)

        try:
            cues, warnings = self._ask(prompt, parse, "reminder_cues", f"extract:{item.item_id}", log)
        except ParseFailure as exc:
            raise ParseFailure(f"{item.item_id}: extraction output unparseable after retry", exc.raw) from exc
        if log is not None:
            log.n_candidates = len(cues)
            log.warnings.extend(warnings)
        if cues:
            _, bank = mint_ids(bank, "candidate", len(cues))
        return cues, bank

    def _merge_prompt(self, bank: Bank, mtype: MemoryType, cues: list[CandidateCue]) -> list[PromptSegment]:
        existing = "".join(entry_line(e) for e in bank.active_entries(mtype)) or "(none)\n"
        candidates: list[PromptSegment] = []
        for c in cues:
            candidates.append(TextSegment(f"[{c.candidate_id}] {c.descriptor} ({_anchor_text(c)})\n"))
            candidates.extend(self._anchor_media(c))
        category = mtype.heading.lower()
        return self.templates.render("merge", category=category, entries=existing, candidates=candidates)

    def _verify_prompt(
        self, bank: Bank, mtype: MemoryType, revisions: list[tuple[MergeDecision, CandidateCue]]
    ) -> list[PromptSegment]:
        body: list[PromptSegment] = []
        for d, c in revisions:
            entry = bank.get(d.target_entry_id)
            body.append(
                TextSegment(
                    f"{c.candidate_id}: REVISE {entry.entry_id} from \"{entry.descriptor}\" "
                    f"to \"{d.revised_descriptor}\".\nExisting entry evidence:\n"
                )
            )
            body.extend(entry_media(entry, self.config.span_frames))
            body.append(TextSegment("New candidate evidence:\n"))
            body.extend(self._anchor_media(c))
        return self.templates.render("revise_verify", category=mtype.heading.lower(), revisions=body)

    def _withdrawn(self, d: MergeDecision) -> MergeDecision:
        fb = self.config.revise_fallback
        if fb is DecisionKind.CONFIRM:
            return MergeDecision(DecisionKind.CONFIRM, d.candidate_id, d.target_entry_id)
        return MergeDecision(fb, d.candidate_id)

    def merge_candidates(self, bank: Bank, cues: Sequence[CandidateCue], log: ItemLog | None = None) -> Bank:
        """One merge prompt per memory type present, verification-gated REVISE, then apply."""
        for mtype in CATEGORY_ORDER:
            group = [c for c in cues if c.memory_type is mtype]
            if not group:
                continue
            prompt = self._merge_prompt(bank, mtype, group)
            decisions, warnings = self._ask(
                prompt,
                lambda raw: parse_merge_decisions(raw, group, bank),
                "reminder_decisions",
                f"merge:{mtype.value}",
                log,
            )
            if log is not None:
                log.warnings.extend(warnings)

            by_id = {c.candidate_id: c for c in group}
            revisions = [(d, by_id[d.candidate_id]) for d in decisions if d.kind is DecisionKind.REVISE]
            verdicts: dict[str, bool] = {}
            if revisions:
                ids = [d.candidate_id for d, _ in revisions]
                verdicts, vwarn = self._ask(
                    self._verify_prompt(bank, mtype, revisions),
                    lambda raw: parse_revise_verdicts(raw, ids),
                    "reminder_verdicts",
                    f"verify:{mtype.value}",
                    log,
                )
                if log is not None:
                    log.warnings.extend(vwarn)

            for d in decisions:
                proposed = d.kind
                if d.kind is DecisionKind.REVISE and not verdicts[d.candidate_id]:
                    d = self._withdrawn(d)
                before = bank.next_entry_seq
                bank = apply_decision(bank, d, by_id[d.candidate_id])
                if log is not None:
                    new_id = bank.entries[-1].entry_id if bank.next_entry_seq != before else None
                    log.decisions.append(
                        DecisionLog(
                            candidate_id=d.candidate_id,
                            memory_type=mtype.value,
                            kind=d.kind.value,
                            proposed=proposed.value,
                            target_entry_id=d.target_entry_id,
                            new_entry_id=new_id,
                        )
                    )
        return bank

    def build_bank(self, items: Sequence[ContextItem], owner_id: str, preset: str = "wearer") -> tuple[Bank, ConstructionLog]:
        """Fold extraction and merging over the items in order.

        Items whose extraction or merge fails after the retry are skipped and
        reported together in a ``ConstructionError`` once all items ran.
        """
        if not items:
            raise ValueError("build_bank needs at least one context item")
        if preset == "descriptions":
            return self.build_description_bank(items, owner_id)
        bank = Bank(owner_id)
        log = ConstructionLog(owner_id, preset, self.backend.model, self.templates.set_id)
        failures: dict[str, Exception] = {}
        for item in items:
            item_log = ItemLog(item.item_id, item.clip_id)
            log.items.append(item_log)
            try:
                cues, bank_after = self.extract_cues(item, bank, preset, item_log)
                bank = self.merge_candidates(bank_after, cues, item_log)
            except ParseFailure as exc:
                failures[item.item_id] = exc
        if failures:
            raise ConstructionError(failures)
        return bank, log

    def build_description_bank(self, items: Sequence[ContextItem], owner_id: str, axis: str | None = None) -> tuple[Bank, ConstructionLog]:
        """One entry per reference item, its descriptor being the item's description."""
        axis = axis or ("objects" if any(i.declaration.startswith("This is my") for i in items) else "persons")
        mtype = MemoryType.OWNED_OBJECTS if axis == "objects" else MemoryType.APPEARANCE
        bank = Bank(owner_id)
        log = ConstructionLog(owner_id, "descriptions", self.backend.model, self.templates.set_id)
        for item in items:
            item_log = ItemLog(item.item_id, item.clip_id, n_candidates=1)
            log.items.append(item_log)
            description = self.describe(item, axis)
            descriptor = self._language_line(item, axis, None, description)
            (cid,), bank = mint_ids(bank, "candidate", 1)
            idx = self.store.sampled(item.clip_id, self.config.sample_frames)
            cue = CandidateCue(cid, mtype, descriptor, FrameEvidence(item.clip_id, idx[len(idx) // 2]))
            bank = apply_decision(bank, MergeDecision(DecisionKind.ADD, cid), cue)
            item_log.decisions.append(
                DecisionLog(cid, mtype.value, "ADD", "ADD", new_entry_id=bank.entries[-1].entry_id)
            )
        return bank, log

    def bank_for(self, q: QueryInstance) -> tuple[Bank, ConstructionLog]:
        """Build (once) the task-appropriate bank for a query's context items."""
        preset = _preset_for(q.task)
        owner = q.owner_id or default_owner(q.task, q.context)
        key = (preset, q.task.axis, owner, tuple(i.item_id for i in q.context))
        with self._bank_lock:
            if key in self._failed:
                raise self._failed[key]
            if key not in self._banks:
                try:
                    if preset == "descriptions":
                        self._banks[key] = self.build_description_bank(q.context, owner, q.task.axis)
                    else:
                        self._banks[key] = self.build_bank(q.context, owner, preset)
                except Exception as exc:
                    # remember the failure so later queries on this owner fail fast
                    self._failed[key] = exc
                    raise
            return self._banks[key]

    def built_banks(self) -> list[tuple[Bank, ConstructionLog]]:
        with self._bank_lock:
            return [self._banks[k] for k in sorted(self._banks)]

    # -- descriptions (language context, description banks) -------------------

    def describe(self, item: ContextItem, axis: str) -> str:
        cached = self.descriptions.get(item.item_id, self.backend.model)
        if cached is not None:
            return cached
        name = {"persons": "describe_persons", "objects": "describe_objects",
                "behavior": "describe_behavior", "egoid": "describe_egoid"}[axis]
        prompt = self.templates.render(name, media=self._item_media(item), **{SLOT[axis]: _subject(item)})
        text = self._call(prompt, f"describe:{item.item_id}").strip()
        self.descriptions.put(item.item_id, self.backend.model, text)
        return text

    def describe_all(self, items: Sequence[ContextItem]) -> str:
        key = "+".join(i.item_id for i in items)
        cached = self.descriptions.get(key, self.backend.model)
        if cached is not None:
            return cached
        media = [m for item in items for m in self._item_media(item)]
        prompt = self.templates.render("describe_behavior_all", media=media, step=_subject(items[0]))
        text = self._call(prompt, f"describe:{key}").strip()
        self.descriptions.put(key, self.backend.model, text)
        return text

    def _language_line(self, item: ContextItem, axis: str, task: Task | None, description: str) -> str:
        if axis == "persons":
            return self.templates.text("language_persons", description=description, person=_subject(item))
        if axis == "objects":
            return self.templates.text("language_objects", description=description, object=_subject(item))
        name = "language_behqa" if task is Task.BehQA else "language_beherr"
        return self.templates.text(name, description=description, step=_subject(item))

    # -- shared query pieces -------------------------------------------------

    def _question(self, q: QueryInstance) -> str:
        text = q.question
        if q.options:
            text += "\n" + "\n".join(f"{'ABCD'[i]}. {opt}" for i, opt in enumerate(q.options))
        return text

    def _format(self, name: str, q: QueryInstance) -> str:
        return self.templates.text(name, shape=ANSWER_SHAPE[q.task.answer_kind])

    def _new_trace(self, q: QueryInstance, regime: str) -> QueryTrace:
        return QueryTrace(q.instance_id, q.task.value, regime, self.backend.model, self.templates.set_id)

    def interpret(self, q: QueryInstance, raw: str) -> tuple[str | BoundingBox | None, bool, str | None]:
        """Parse a final answer; unparseable output falls back per task type."""
        kind = q.task.answer_kind
        try:
            if kind == "binary":
                return parse_binary(raw), False, None
            if kind == "mcq":
                return parse_option(raw), False, None
            clip = self.store.clip(q.query_clip)
            if not (clip.width and clip.height):
                raise ValueError(f"query clip {clip.clip_id} has no recorded frame size")
            return parse_bbox(raw, clip.width, clip.height), False, None
        except ParseFailure as exc:
            note = f"unparseable answer ({type(exc).__name__}: {exc})"
            if kind == "binary":
                return "No", True, note
            return None, True, note

    def _finish(self, q: QueryInstance, trace: QueryTrace, raw: str, note: str | None = None) -> QueryResult:
        parsed, invalid, why = self.interpret(q, raw)
        for n in (note, why):
            if n:
                trace.notes.append(n)
        return QueryResult(raw, parsed, invalid, trace)

    def _invalid(self, q: QueryInstance, trace: QueryTrace, raw: str, note: str) -> QueryResult:
        trace.notes.append(note)
        parsed = "No" if q.task.answer_kind == "binary" else None
        return QueryResult(raw, parsed, True, trace)

    # -- stage II ------------------------------------------------------------

    def answer_query(self, bank: Bank, q: QueryInstance, mode: BankMode = BankMode.ADAPTIVE) -> QueryResult:
        mode = BankMode(mode)
        trace = self._new_trace(q, f"bank:{mode.value}")
        if q.task.axis == "behavior":
            return self._answer_phases(bank, q, trace)
        if q.task.axis == "egoid":
            views = self._wearer_views(bank, q)
        else:
            views = self._entity_views(bank, q)
        return self._two_call(bank, q, mode, trace, views)

    def _wearer_views(self, bank: Bank, q: QueryInstance) -> dict[str, Callable]:
        lead = q.context[0].declaration if q.context else self.templates.text("context_egoid", action=_subject_q(q))
        action = _subject_q(q)
        common = dict(query_media=self._query_media(q), question=self._question(q))
        t = self.templates
        return {
            "call1": lambda: t.render("egoid_call1", lead=lead, bank_text=render_text_view(bank),
                                      format=self._format("format_triage", q), **common),
            "call2": lambda ids: t.render("egoid_call2", action=action,
                                          bank_view=render_hybrid_view(bank, ids, self.config.span_frames),
                                          entry_ids=", ".join(ids), query_media=common["query_media"],
                                          format=self._format("format_final", q)),
            "descriptors": lambda: t.render("egoid_descriptors", lead=lead, bank_text=render_text_view(bank),
                                            format=self._format("format_answer", q), **common),
            "all": lambda: t.render("egoid_all_evidence", action=action,
                                    bank_view=render_hybrid_view(bank, bank.active_ids, self.config.span_frames),
                                    format=self._format("format_final", q), **common),
        }

    def _entity_views(self, bank: Bank, q: QueryInstance) -> dict[str, Callable]:
        reference = "images" if all(i.modality is Modality.IMAGE for i in q.context) else "clips"
        listing = "".join(f"[{e.entry_id}] {e.descriptor}\n" for e in bank.active_entries())
        common = dict(reference=reference, query_media=self._query_media(q), question=self._question(q))
        t = self.templates

        def evidence(ids: Sequence[str]) -> list[PromptSegment]:
            out: list[PromptSegment] = []
            for e in bank.active_entries():
                if e.entry_id in ids:
                    out.append(TextSegment(f"[{e.entry_id}] {e.descriptor}\n"))
                    out.extend(entry_media(e, self.config.span_frames))
            return out

        return {
            "call1": lambda: t.render("entity_call1", listing=listing, format=self._format("format_triage", q), **common),
            "call2": lambda ids: t.render("entity_call2", evidence=evidence(ids),
                                          format=self._format("format_final", q), **common),
            "descriptors": lambda: t.render("entity_descriptors", listing=listing,
                                            format=self._format("format_answer", q), **common),
            "all": lambda: t.render("entity_all_evidence", listing=evidence(bank.active_ids),
                                    format=self._format("format_final", q), **common),
        }

    def _record_ids(self, bank: Bank, trace: QueryTrace, requested: Sequence[str], raw_final: str) -> None:
        trace.requested_ids = list(requested)
        decisive = parse_decisive(raw_final)
        stray = [d for d in decisive if d not in requested]
        if stray:
            trace.notes.append(f"decisive ids outside the inlined set ignored: {', '.join(stray)}")
        trace.decisive_ids = [d for d in decisive if d in requested]
        for eid in trace.requested_ids:
            trace.entry_types[eid] = bank.get(eid).memory_type.value

    def _two_call(self, bank: Bank, q: QueryInstance, mode: BankMode, trace: QueryTrace, views: dict) -> QueryResult:
        if mode is BankMode.DESCRIPTORS_ONLY:
            raw = self._call(views["descriptors"](), "answer", trace)
            try:
                if isinstance(parse_triage(raw), Request):
                    return self._invalid(q, trace, raw, "evidence request in descriptors-only mode")
            except ParseFailure:
                pass
            return self._finish(q, trace, raw)

        if mode is BankMode.ALL_EVIDENCE:
            raw = self._call(views["all"](), "answer", trace)
            self._record_ids(bank, trace, bank.active_ids, raw)
            return self._finish(q, trace, raw)

        raw1 = self._call(views["call1"](), "triage", trace)
        try:
            outcome = parse_triage(raw1)
        except ParseFailure:
            # no marker: accept a bare answer, otherwise the task fallback applies
            return self._finish(q, trace, raw1, "triage reply carried no ANSWER/REQUEST marker")
        if isinstance(outcome, Answer):
            return self._finish(q, trace, raw1)

        active = set(bank.active_ids)
        requested = [i for i in outcome.entry_ids if i in active]
        if len(requested) < len(outcome.entry_ids):
            dropped = [i for i in outcome.entry_ids if i not in active]
            trace.notes.append(f"requested ids not in bank ignored: {', '.join(dropped)}")
        if not requested:
            return self._invalid(q, trace, raw1, "evidence request named no active entry")
        raw2 = self._call(views["call2"](requested), "verify", trace)
        self._record_ids(bank, trace, requested, raw2)
        return self._finish(q, trace, raw2)

    def _answer_phases(self, bank: Bank, q: QueryInstance, trace: QueryTrace) -> QueryResult:
        # the behavior preset answers from the phase record in a single call, whatever the mode
        phases = sorted(bank.active_entries(MemoryType.BEHAVIOR), key=_phase_order)
        listing = "".join(f"[{e.entry_id}] {e.descriptor}\n" for e in phases) or "(none)\n"
        step = _subject_q(q)
        fmt = self._format("format_answer", q)
        if q.task is Task.BehQA:
            prompt = self.templates.render(
                "behavior_qa_bank", step=step, phases=listing, reference_description=self.describe_all(q.context),
                query_media=self._query_media(q), question=self._question(q), format=fmt,
            )
        else:
            prompt = self.templates.render(
                "behavior_err_bank", step=step, phases=listing, query_media=self._query_media(q), format=fmt
            )
        raw = self._call(prompt, "answer", trace)
        return self._finish(q, trace, raw)

    # -- baselines -----------------------------------------------------------

    def run_regime(self, q: QueryInstance, regime: Regime) -> QueryResult:
        if regime.kind is RegimeKind.BANK:
            bank, _ = self.bank_for(q)
            return self.answer_query(bank, q, regime.mode)

        trace = self._new_trace(q, str(regime))
        common = dict(query_media=self._query_media(q), question=self._question(q),
                      format=self._format("format_answer", q))
        if regime.kind is RegimeKind.NO_CONTEXT:
            prompt = self.templates.render("no_context", **common)
        elif regime.kind is RegimeKind.VISUAL_CTX:
            prompt = self.templates.render("with_context", context=self._visual_context(regime.truncate(q.context)), **common)
        else:
            prompt = self.templates.render("with_context", context=self._language_context(q, regime.truncate(q.context)), **common)
        raw = self._call(prompt, "answer", trace)
        return self._finish(q, trace, raw)

    def _visual_context(self, items: Sequence[ContextItem]) -> list[PromptSegment]:
        out: list[PromptSegment] = []
        prev = None
        for item in items:
            if item.declaration != prev:
                out.append(TextSegment(item.declaration + "\n"))
                prev = item.declaration
            out.extend(self._item_media(item))
        return out

    def _language_context(self, q: QueryInstance, items: Sequence[ContextItem]) -> str:
        axis = q.task.axis
        descriptions = [self.describe(item, axis) for item in items]
        if axis == "egoid":
            name = "language_egoid_one" if len(items) == 1 else "language_egoid_many"
            return self.templates.text(name, lead=items[0].declaration, n=len(items), descriptions="\n\n".join(descriptions))
        return "\n".join(self._language_line(item, axis, q.task, d) for item, d in zip(items, descriptions))


def _subject(item: ContextItem) -> str:
    if not item.subject:
        raise ValueError(f"context item {item.item_id} has no subject (person/object/step/action)")
    return item.subject


def _subject_q(q: QueryInstance) -> str:
    if q.subject:
        return q.subject
    if q.context and q.context[0].subject:
        return q.context[0].subject
    raise ValueError(f"instance {q.instance_id} has no subject")


def _anchor_text(c: CandidateCue) -> str:
    a = c.anchor
    if isinstance(a, SpanEvidence):
        return f"{a.clip_id} frames {a.start_frame}-{a.end_frame}"
    return f"{a.clip_id} frame {a.frame_index}"


def _phase_order(e: BankEntry):
    ev = e.evidence[0]
    start = ev.start_frame if isinstance(ev, SpanEvidence) else ev.frame_index
    return (start, e.entry_id)
