"""Bank-construction and query-time statistics, computed from persisted logs."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from ..bank import CATEGORY_ORDER, Bank, DecisionKind
from ..errors import EmptyLog
from ..pipeline.construction import ConstructionLog
from ..pipeline.types import QueryTrace
from .metrics import format_number, format_percent

BLANK = "—"
UPDATE_KINDS = (DecisionKind.CONFIRM.value, DecisionKind.REVISE.value, DecisionKind.RETRACT.value)
SHORT = {"appearance": "A", "owned_objects": "O", "behavior": "B"}


@dataclass(frozen=True)
class BankStats:
    n_banks: int
    n_items: int
    n_candidates: int
    n_entries: int  # final active entries summed over banks
    cues_per_clip: Fraction
    entries: Fraction  # mean final active entries per bank
    split: dict[str, Fraction]  # share of final entries per memory type
    compression: Fraction
    revision_share: Optional[Fraction]
    updated_share: Optional[Fraction]


def bank_stats(logs: Sequence[ConstructionLog], banks: Sequence[Bank]) -> BankStats:
    """Summarize construction logs and the banks they produced.

    Compression pools entries and candidates over all banks. The revision
    share counts CONFIRM, REVISE and RETRACT among applied decisions other
    than DROP.
    """
    if not logs or not any(log.items for log in logs):
        raise EmptyLog("no construction logs to summarize")
    if len(banks) != len(logs):
        raise ValueError(f"{len(logs)} logs but {len(banks)} banks")
    n_items = sum(len(log.items) for log in logs)
    n_cand = sum(log.n_candidates for log in logs)
    active = [e for b in banks for e in b.active_entries()]
    kinds = [d.kind for log in logs for d in log.decisions()]
    merged = [k for k in kinds if k != DecisionKind.DROP.value]
    split = {
        m.value: Fraction(sum(1 for e in active if e.memory_type is m), len(active)) if active else Fraction(0)
        for m in CATEGORY_ORDER
    }
    return BankStats(
        n_banks=len(banks),
        n_items=n_items,
        n_candidates=n_cand,
        n_entries=len(active),
        cues_per_clip=Fraction(n_cand, n_items),
        entries=Fraction(len(active), len(banks)),
        split=split,
        compression=Fraction(len(active), n_cand) if n_cand else Fraction(0),
        revision_share=Fraction(sum(1 for k in merged if k in UPDATE_KINDS), len(merged)) if merged else None,
        updated_share=Fraction(sum(1 for e in active if e.was_updated), len(active)) if active else None,
    )


@dataclass(frozen=True)
class QueryStats:
    n_queries: int
    n_requests: int
    request_rate: Fraction
    requested: Optional[Fraction]  # mean over queries that requested evidence
    decisive: Optional[Fraction]
    requested_split: Optional[dict[str, Fraction]]
    decisive_split: Optional[dict[str, Fraction]]


def _split(traces: Sequence[QueryTrace], attr: str) -> Optional[dict[str, Fraction]]:
    types = [t.entry_types[eid] for t in traces for eid in getattr(t, attr)]
    if not types:
        return None
    return {m.value: Fraction(types.count(m.value), len(types)) for m in CATEGORY_ORDER}


def query_stats(traces: Sequence[QueryTrace]) -> QueryStats:
    if not traces:
        raise EmptyLog("no query traces to summarize")
    asked = [t for t in traces if t.requested_ids]
    return QueryStats(
        n_queries=len(traces),
        n_requests=len(asked),
        request_rate=Fraction(len(asked), len(traces)),
        requested=Fraction(sum(len(t.requested_ids) for t in asked), len(asked)) if asked else None,
        decisive=Fraction(sum(len(t.decisive_ids) for t in asked), len(asked)) if asked else None,
        requested_split=_split(asked, "requested_ids"),
        decisive_split=_split(asked, "decisive_ids"),
    )


def _opt(value: Optional[Fraction], render) -> str:
    return BLANK if value is None else render(value)


def _split_text(split: Optional[dict[str, Fraction]]) -> str:
    if split is None:
        return BLANK
    return "/".join(format_number(split[m.value] * 100, 1) for m in CATEGORY_ORDER)


def render_bank_stats(s: BankStats) -> str:
    header = "| Banks | Cues/clip | Entries | A/O/B (%) | Compression | Revision ops (%) | Updated (%) |"
    row = "| " + " | ".join(
        [
            str(s.n_banks),
            format_number(s.cues_per_clip),
            format_number(s.entries),
            _split_text(s.split if s.n_entries else None),
            format_number(s.compression, 3),
            _opt(s.revision_share, format_percent),
            _opt(s.updated_share, format_percent),
        ]
    ) + " |"
    return "## Bank construction\n\n" + header + "\n|" + "---:|" * 7 + "\n" + row + "\n"


def render_query_stats(s: QueryStats) -> str:
    header = "| Queries | Visual requests (%) | Requested | Decisive | Requested A/O/B (%) | Decisive A/O/B (%) |"
    row = "| " + " | ".join(
        [
            str(s.n_queries),
            format_percent(s.request_rate),
            _opt(s.requested, format_number),
            _opt(s.decisive, format_number),
            _split_text(s.requested_split),
            _split_text(s.decisive_split),
        ]
    ) + " |"
    return "## Query-time evidence use\n\n" + header + "\n|" + "---:|" * 6 + "\n" + row + "\n"
