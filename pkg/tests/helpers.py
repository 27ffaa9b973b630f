"""Synthetic media, scenarios and scripted responders shared by tests and the fixture builder."""

from __future__ import annotations

import json
import random
import re
from pathlib import Path
from typing import Sequence

from PIL import Image

from ctxbank.bank import Bank, CandidateCue, DecisionKind, FrameEvidence, MemoryType, MergeDecision, SpanEvidence, apply_decision, mint_ids
from ctxbank.evalkit.records import PredictionRecord
from ctxbank.media import MediaStore
from ctxbank.pipeline.construction import ConstructionLog, DecisionLog, ItemLog
from ctxbank.pipeline.templates import TemplateSet
from ctxbank.pipeline.types import Task
from ctxbank.segments import MediaSegment, PromptSegment, TextSegment

FIXTURES = Path(__file__).parent / "fixtures"
SIZE = (64, 48)
RAW_VIDEO_FRAMES = 20  # ingest keeps 16 of these

EGO_REF = [f"clip_0{i}" for i in range(1, 6)]
EGO_QUERY = [f"ego_q{i}" for i in range(1, 5)]
EGO_OWNER = "wearer01"
EGO_ACTION = "scrolling on my phone"

VIDEO_CLIPS = EGO_REF + EGO_QUERY + ["b_ref1", "b_ref2", "b_q1", "b_q2", "b_q3", "e_ref1", "e_ref2", "e_ref3", "e_q1", "e_q2", "e_q3"]
IMAGE_CLIPS = ["p_ref1", "p_ref2", "p_q1", "p_q2", "p_q3", "o_ref1", "o_ref2", "o_q1", "o_q2", "o_q3"]


def _color(clip_id: str, i: int) -> tuple[int, int, int]:
    h = sum(ord(ch) * (k + 1) for k, ch in enumerate(clip_id))
    return ((h * 37 + i * 11) % 256, (h * 11 + i * 5) % 256, (h * 5 + i * 3) % 256)


def make_store(root: Path) -> MediaStore:
    """Generate tiny solid-colour frames and ingest them; deterministic."""
    raw = root / "raw"
    for clip_id in VIDEO_CLIPS + IMAGE_CLIPS:
        d = raw / clip_id
        d.mkdir(parents=True, exist_ok=True)
        n = RAW_VIDEO_FRAMES if clip_id in VIDEO_CLIPS else 1
        for i in range(n):
            Image.new("RGB", SIZE, _color(clip_id, i)).save(d / f"{i:03d}.png")
    store = MediaStore(root / "media")
    for clip_id in VIDEO_CLIPS + IMAGE_CLIPS:
        store.ingest(clip_id, raw / clip_id)
    return store


# -- prompt inspection ------------------------------------------------------


def prompt_text(segments: Sequence[PromptSegment]) -> str:
    return "".join(s.content for s in segments if isinstance(s, TextSegment))


def media_clips(segments: Sequence[PromptSegment]) -> list[str]:
    out: list[str] = []
    for s in segments:
        if isinstance(s, MediaSegment) and s.clip_id not in out:
            out.append(s.clip_id)
    return out


def is_query_clip(clip_id: str) -> bool:
    return "_q" in clip_id


def query_clip_of(segments: Sequence[PromptSegment]) -> str | None:
    for c in media_clips(segments):
        if is_query_clip(c):
            return c
    return None


def context_media(segments: Sequence[PromptSegment]) -> list[MediaSegment]:
    return [s for s in segments if isinstance(s, MediaSegment) and not is_query_clip(s.clip_id)]


def media_blocks(segments: Sequence[PromptSegment], clip_filter=lambda c: True) -> int:
    """Number of maximal runs of consecutive media segments (matching the filter)."""
    blocks, inside = 0, False
    for s in segments:
        hit = isinstance(s, MediaSegment) and clip_filter(s.clip_id)
        if hit and not inside:
            blocks += 1
        inside = hit
    return blocks


_CID_RE = re.compile(r"\[(c_\d{3})\]")
_REVISE_RE = re.compile(r"(c_\d{3}): REVISE")
_ENTRY_RE = re.compile(r"^\[(e_\d{3})\]", re.MULTILINE)

REMINDER = "Your previous reply could not be read"


def _kind(text: str) -> str:
    if "Extract distinctive cues" in text or "Break my execution into its temporal phases" in text:
        return "extract_retry" if REMINDER in text else "extract"
    if "You are reconciling new" in text:
        return "merge"
    if "You proposed the following REVISE" in text:
        return "verify"
    if "request the bank entries" in text or "request the specific entries" in text:
        return "triage"
    if "you requested" in text:
        return "final"
    if "Describe" in text or "Give a detailed description" in text:
        return "describe"
    return "answer"


# -- five-clip wearer scenario ---------------------------------------------

EGO_CUES = {
    "clip_01": [
        "appearance | thin silver bracelet on left wrist | frame 3",
        "appearance | dark green sleeve cuff | frame 7",
        "behavior | swipes phone screen upward with right thumb | frames 4-11",
    ],
    "clip_02": [
        "appearance | thin silver bracelet, left wrist | frame 5",
        "owned_objects | black phone with cracked corner | frame 2",
        "behavior | holds phone in right hand close to chest | frames 0-6",
    ],
    "clip_03": [
        "appearance | dark green knit sweater with ribbed cuffs | frame 9",
        "appearance | silver ring on right index finger | frame 4",
        "appearance | red nail polish | frame 12",
    ],
    "clip_04": [
        "appearance | unpainted natural nails | frame 6",
        "behavior | swipes phone screen with left thumb | frames 2-9",
        "owned_objects | phone with cracked corner in black case | frame 10",
    ],
    "clip_05": [
        "appearance | silver bracelet on left wrist | frame 1",
        "behavior | taps screen twice | frames 3-5",
        "appearance | small mole on back of left hand | frame 8",
    ],
}
EGO_DECISIONS = {
    "c_001": "ADD",
    "c_002": "ADD",
    "c_003": "ADD",
    "c_004": "CONFIRM e_001",
    "c_005": "ADD",
    "c_006": "ADD",
    "c_007": 'REVISE e_002 "dark green knit sweater with ribbed cuffs"',
    "c_008": "ADD",
    "c_009": "ADD",
    "c_010": "RETRACT e_007",
    "c_011": 'REVISE e_003 "swipes phone screen with either thumb"',
    "c_012": "CONFIRM e_004",
    "c_013": "CONFIRM e_001",
    # c_014 is left unmentioned and therefore dropped
    "c_015": "ADD",
}
EGO_VERDICTS = {"c_007": "CONFIRM", "c_011": "WITHDRAW"}
EGO_TRIAGE = {
    "ego_q1": "REQUEST: e_001, e_004",
    "ego_q2": "ANSWER: No",
    "ego_q3": "REQUEST: e_003",
    "ego_q4": "ANSWER: Yes",
}
EGO_FINAL = {
    "ego_q1": "ANSWER: Yes\nDECISIVE: e_001",
    "ego_q3": "ANSWER: Yes\nDECISIVE: e_003",
}
EGO_GOLD = {"ego_q1": "Yes", "ego_q2": "No", "ego_q3": "Yes", "ego_q4": "No"}


def _cues_block(lines: Sequence[str]) -> str:
    return "```cues\n" + "".join(line + "\n" for line in lines) + "```"


def _merge_reply(text: str, table: dict[str, str]) -> str:
    cids = _CID_RE.findall(text)
    lines = [f"{cid}: {table[cid]}" for cid in cids if cid in table]
    return "```decisions\n" + "".join(line + "\n" for line in lines) + "```"


def _verify_reply(text: str, table: dict[str, str]) -> str:
    lines = [f"{cid}: {table.get(cid, 'WITHDRAW')}" for cid in _REVISE_RE.findall(text)]
    return "```verification\n" + "".join(line + "\n" for line in lines) + "```"


def ego_responder(segments: Sequence[PromptSegment]) -> str:
    text = prompt_text(segments)
    kind = _kind(text)
    if kind in ("extract", "extract_retry"):
        clip = media_clips(segments)[0]
        if clip == "clip_03" and kind == "extract":
            return "The wearer seems to be sitting on a sofa, looking at a phone."
        return _cues_block(EGO_CUES[clip])
    if kind == "merge":
        return _merge_reply(text, EGO_DECISIONS)
    if kind == "verify":
        return _verify_reply(text, EGO_VERDICTS)
    q = query_clip_of(segments)
    if kind == "triage":
        return EGO_TRIAGE[q]
    if kind == "final":
        return EGO_FINAL[q]
    if "visual evidence attached for every entry" in text:
        return "ANSWER: Yes\nDECISIVE: e_001, e_006"
    if kind == "answer":
        return "ANSWER: No"
    raise AssertionError(f"unexpected prompt in wearer scenario: {text[:80]!r}")


def ego_items(templates: TemplateSet) -> list[dict]:
    declaration = templates.text("context_egoid", action=EGO_ACTION)
    return [
        {"item_id": f"ref_{i + 1}", "clip_id": c, "modality": "video", "declaration": declaration, "subject": EGO_ACTION}
        for i, c in enumerate(EGO_REF)
    ]


def ego_manifest(templates: TemplateSet) -> dict:
    items = ego_items(templates)
    instances = [
        {
            "instance_id": f"ego-{i + 1:03d}",
            "task": "EgoID",
            "subject": EGO_ACTION,
            "owner_id": EGO_OWNER,
            "query": {"clip_id": q, "modality": "video"},
            "context": items,
            "gold": EGO_GOLD[q],
            "subset": "behavior-centric" if i == 2 else "general",
        }
        for i, q in enumerate(EGO_QUERY)
    ]
    return {"schema_version": 1, "counts": {"EgoID": 4}, "instances": instances}


# -- twelve-instance synthetic manifest -------------------------------------

M12_ANSWERS = {
    "p_q1": "ANSWER: Yes",
    "p_q2": "ANSWER: Yes",
    "p_q3": "ANSWER: B",
    "o_q1": "ANSWER: Yes",
    "o_q2": "ANSWER: No",
    "o_q3": "ANSWER: [0.25, 0.25, 0.75, 0.75]",
    "b_q1": "ANSWER: No",
    "b_q2": "ANSWER: No",
    "b_q3": "ANSWER: C",
    "e_q1": "ANSWER: Yes",
    "e_q2": "ANSWER: No",
    "e_q3": "hard to tell from these frames",
}
M12_NO_CONTEXT = {"p_q3": "ANSWER: A", "b_q3": "ANSWER: A", "o_q3": "ANSWER: [0, 0, 64, 48]"}


def m12_responder(segments: Sequence[PromptSegment]) -> str:
    text = prompt_text(segments)
    kind = _kind(text)
    clips = media_clips(segments)
    if kind in ("extract", "extract_retry"):
        clip = clips[0]
        if clip.startswith("b_"):
            return _cues_block(["behavior | cracks eggs against the bowl rim | frames 0-5",
                                "behavior | whisks in small fast circles | frames 6-15"])
        return _cues_block(["appearance | navy cap with white logo | frame 2",
                            "behavior | wipes plate in circular strokes | frames 1-12"])
    if kind == "merge":
        existing = [e for e in _ENTRY_RE.findall(text.split("New candidates:")[0])]
        cids = _CID_RE.findall(text)
        if not existing:
            lines = [f"{c}: ADD" for c in cids]
        else:
            lines = [f"{c}: CONFIRM {existing[i % len(existing)]}" for i, c in enumerate(cids)]
        return "```decisions\n" + "".join(line + "\n" for line in lines) + "```"
    if kind == "describe":
        return f"Reference {clips[0]}: colour patches, steady framing, nothing else of note."
    q = query_clip_of(segments)
    if kind == "triage":
        if q == "e_q2":
            return "ANSWER: No"
        if q == "e_q3":
            return M12_ANSWERS[q]
        return "REQUEST: e_001"
    if kind == "final":
        return M12_ANSWERS[q] + "\nDECISIVE: e_001"
    if isinstance(segments[0], MediaSegment) and is_query_clip(segments[0].clip_id):
        # no reference material at all: a fixed, weaker guess
        if q in M12_NO_CONTEXT:
            return M12_NO_CONTEXT[q]
        return "ANSWER: Yes"
    return M12_ANSWERS[q]


def _refs(prefix: str, n: int, modality: str, subject: str) -> list[dict]:
    return [
        {"item_id": f"{prefix}_item{i}", "clip_id": f"{prefix}_ref{i}", "modality": modality, "subject": subject}
        for i in range(1, n + 1)
    ]


def manifest12() -> dict:
    persons = _refs("p", 2, "image", "Maya")
    objects = _refs("o", 2, "image", "bottle")
    behavior = _refs("b", 2, "video", "whisking eggs")
    wearer = _refs("e", 3, "video", "washing dishes")

    def inst(iid, task, clip, modality, context, gold, **kw):
        d = {"instance_id": iid, "task": task, "query": {"clip_id": clip, "modality": modality}, "context": context, "gold": gold}
        d.update(kw)
        return d

    instances = [
        inst("per-001", "PerID", "p_q1", "image", persons, "Yes", subject="Maya"),
        inst("per-002", "PerID", "p_q2", "image", persons, "No", subject="Maya"),
        inst("rel-001", "PerRel", "p_q3", "image", persons, "B", subject="Maya",
             question="What is Maya doing in this image?",
             options=["Reading a book", "Talking to a friend", "Cooking", "Sleeping"]),
        inst("obj-001", "ObjID", "o_q1", "image", objects, "Yes", subject="bottle"),
        inst("obj-002", "ObjID", "o_q2", "image", objects, "No", subject="bottle"),
        inst("det-001", "ObjDet", "o_q3", "image", objects, [16, 12, 48, 36], subject="bottle"),
        inst("err-001", "BehErr", "b_q1", "video", behavior, "Yes", subject="whisking eggs"),
        inst("err-002", "BehErr", "b_q2", "video", behavior, "No", subject="whisking eggs"),
        inst("bqa-001", "BehQA", "b_q3", "video", behavior, "C", subject="whisking eggs",
             question="Which hand do I usually hold the bowl with?",
             options=["Neither", "Both", "Left", "Right"]),
        inst("ego-001", "EgoID", "e_q1", "video", wearer, "Yes", subject="washing dishes", subset="general"),
        inst("ego-002", "EgoID", "e_q2", "video", wearer, "No", subject="washing dishes", subset="behavior-centric"),
        inst("ego-003", "EgoID", "e_q3", "video", wearer, "Yes", subject="washing dishes", subset="general"),
    ]
    counts = {"PerID": 2, "PerRel": 1, "ObjID": 2, "ObjDet": 1, "BehErr": 2, "BehQA": 1, "EgoID": 3}
    return {"schema_version": 1, "counts": counts, "instances": instances}


# -- hand-countable statistics fixture --------------------------------------

# per item: (memory type, decision) for each of its 3 candidates
STATS_PLAN = [
    [("appearance", "ADD"), ("appearance", "ADD"), ("behavior", "ADD")],
    [("appearance", "CONFIRM e_001"), ("owned_objects", "ADD"), ("behavior", "ADD")],
    [("appearance", "REVISE e_002"), ("appearance", "ADD"), ("owned_objects", "ADD")],
    [("appearance", "ADD"), ("behavior", "CONFIRM e_003"), ("owned_objects", "DROP")],
    [("appearance", "CONFIRM e_001"), ("behavior", "ADD"), ("appearance", "ADD")],
]


def stats_fixture() -> tuple[ConstructionLog, Bank]:
    bank = Bank("stats-owner")
    log = ConstructionLog("stats-owner", "wearer", "handwritten", "v1")
    for n, plan in enumerate(STATS_PLAN, start=1):
        item_log = ItemLog(f"item_{n}", f"clip_{n}", n_candidates=len(plan), calls=len(plan) + 1)
        log.items.append(item_log)
        cids, bank = mint_ids(bank, "candidate", len(plan))
        for k, (cid, (mtype, decision)) in enumerate(zip(cids, plan)):
            mt = MemoryType(mtype)
            anchor = SpanEvidence(f"clip_{n}", k, k + 4) if mt is MemoryType.BEHAVIOR else FrameEvidence(f"clip_{n}", k)
            cue = CandidateCue(cid, mt, f"{mtype} cue {cid}", anchor)
            kind, _, target = decision.partition(" ")
            d = MergeDecision(DecisionKind(kind), cid, target or None, f"refined cue {cid}" if kind == "REVISE" else None)
            before = bank.next_entry_seq
            bank = apply_decision(bank, d, cue)
            new_id = bank.entries[-1].entry_id if bank.next_entry_seq != before else None
            item_log.decisions.append(DecisionLog(cid, mtype, kind, kind, target or None, new_id))
    return log, bank


# -- prediction fixture for the report --------------------------------------

EGO_ROW = dict(yes=302, yes_hits=223, no=312, no_hits=154, behavior_centric=96)


def egoid_predictions(seed: int = 7) -> list[PredictionRecord]:
    """614 wearer-identification predictions whose pooled macro score is 61.60."""
    rng = random.Random(seed)
    rows = []
    for gold, total, hits in (("Yes", EGO_ROW["yes"], EGO_ROW["yes_hits"]), ("No", EGO_ROW["no"], EGO_ROW["no_hits"])):
        wrong = total - hits
        other = "No" if gold == "Yes" else "Yes"
        rows += [(gold, gold, False)] * hits
        # a few of the misses are unparseable replies mapped to an invalid "No"
        rows += [(gold, "No", True)] * 4
        rows += [(gold, other, False)] * (wrong - 4)
    rng.shuffle(rows)
    subsets = ["behavior-centric"] * EGO_ROW["behavior_centric"] + ["general"] * (len(rows) - EGO_ROW["behavior_centric"])
    rng.shuffle(subsets)
    records = []
    for i, ((gold, pred, invalid), subset) in enumerate(zip(rows, subsets), start=1):
        requested = ("e_001", "e_004") if i % 3 else ()
        records.append(
            PredictionRecord(
                instance_id=f"ego-{i:04d}", task=Task.EgoID, regime="bank:adaptive", model="model-a",
                gold=gold, pred=pred, invalid=invalid, calls=2 if requested else 1,
                requested=requested, decisive=requested[:1], subset=subset,
            )
        )
    return records


def small_predictions() -> list[PredictionRecord]:
    """A second report row over a few other tasks."""
    rows = [
        ("per-1", Task.PerID, "Yes", "Yes", False),
        ("per-2", Task.PerID, "Yes", "No", False),
        ("per-3", Task.PerID, "No", "No", False),
        ("rel-1", Task.PerRel, "A", "A", False),
        ("rel-2", Task.PerRel, "B", None, True),
        ("rel-3", Task.PerRel, "C", "D", False),
        ("det-1", Task.ObjDet, "10 10 30 30", "10 10 30 30", False),
        ("det-2", Task.ObjDet, "0 0 10 10", "5 0 15 10", False),
    ]
    return [
        PredictionRecord(iid, task, "no-context", "model-a", gold, pred, invalid, 1)
        for iid, task, gold, pred, invalid in rows
    ]


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- random valid merge sequences -------------------------------------------

_WORDS = ["silver", "green", "left", "wrist", "cap", "phone", "swipes", "knit", "ring", "taps", "mole", "navy"]


def random_cue(rng: random.Random, cid: str, mtype: MemoryType | None = None) -> CandidateCue:
    mtype = mtype or rng.choice(list(MemoryType))
    clip = f"clip_{rng.randint(1, 5):02d}"
    if mtype is MemoryType.BEHAVIOR:
        start = rng.randint(0, 14)
        anchor = SpanEvidence(clip, start, rng.randint(start, 15))
    else:
        anchor = FrameEvidence(clip, rng.randint(0, 15))
    return CandidateCue(cid, mtype, " ".join(rng.sample(_WORDS, 3)), anchor)


def random_step(rng: random.Random, bank: Bank) -> tuple[MergeDecision, CandidateCue, Bank]:
    """One valid (decision, candidate) pair for ``bank``; also returns the bank with the candidate id minted."""
    (cid,), bank = mint_ids(bank, "candidate", 1)
    active = list(bank.active_entries())
    kinds = [DecisionKind.ADD, DecisionKind.DROP]
    if active:
        kinds += [DecisionKind.CONFIRM, DecisionKind.REVISE, DecisionKind.RETRACT]
    kind = rng.choice(kinds)
    if kind in (DecisionKind.ADD, DecisionKind.DROP):
        return MergeDecision(kind, cid), random_cue(rng, cid), bank
    target = rng.choice(active)
    cue = random_cue(rng, cid, target.memory_type if kind is not DecisionKind.RETRACT else None)
    revised = " ".join(rng.sample(_WORDS, 4)) if kind is DecisionKind.REVISE else None
    return MergeDecision(kind, cid, target.entry_id, revised), cue, bank


def check_invariants(bank: Bank, applied: Sequence[MergeDecision]) -> None:
    """Assert every bank invariant after ``applied`` decisions; raises AssertionError."""
    from ctxbank.bank import check_evidence_type, id_number

    ids = [e.entry_id for e in bank.entries]
    assert len(ids) == len(set(ids)), "entry ids not unique"
    for e in bank.entries:
        ops = [h.op for h in e.history]
        assert ops[0] is DecisionKind.ADD, f"{e.entry_id} history must start with ADD"
        n_confirm = ops.count(DecisionKind.CONFIRM)
        n_revise = ops.count(DecisionKind.REVISE)
        assert e.support_count == 1 + n_confirm, f"{e.entry_id} support bookkeeping"
        assert len(e.evidence) == 1 + n_confirm + n_revise, f"{e.entry_id} evidence length"
        for ev in e.evidence:
            check_evidence_type(e.memory_type, ev)
        assert e.is_active == (DecisionKind.RETRACT not in ops), f"{e.entry_id} status"
        assert id_number(e.entry_id) < bank.next_entry_seq, "entry counter must exceed issued ids"
    n_add = sum(d.kind is DecisionKind.ADD for d in applied)
    n_retract = sum(d.kind is DecisionKind.RETRACT for d in applied)
    assert len(bank.active_ids) == n_add - n_retract, "active-count identity"


def run_random_sequence(rng: random.Random, max_ops: int = 50) -> list[tuple[Bank, Bank, MergeDecision]]:
    """Apply a random valid sequence, returning (before, after, decision) for each step."""
    bank = Bank("owner")
    steps = []
    for _ in range(rng.randint(1, max_ops)):
        decision, cue, minted = random_step(rng, bank)
        after = apply_decision(minted, decision, cue)
        steps.append((minted, after, decision))
        bank = after
    return steps


def random_bank(rng: random.Random, max_ops: int = 30) -> Bank:
    steps = run_random_sequence(rng, max_ops)
    return steps[-1][1]
