"""Multimodal model gateway: backends and structured-output parsers."""

from ..segments import MediaSegment, PromptSegment, TextSegment, canonical_hash
from .backends import (
    Backend,
    FunctionBackend,
    RecordingBackend,
    RemoteBackend,
    RemoteConfig,
    ScriptedBackend,
    Transcript,
)
from .parsing import (
    Answer,
    BoundingBox,
    Request,
    TriageOutcome,
    parse_bbox,
    parse_binary,
    parse_candidates,
    parse_decisive,
    parse_merge_decisions,
    parse_option,
    parse_revise_verdicts,
    parse_triage,
    render_candidates,
    render_merge_decisions,
    render_triage,
)

__all__ = [
    "Answer",
    "Backend",
    "BoundingBox",
    "FunctionBackend",
    "MediaSegment",
    "PromptSegment",
    "RecordingBackend",
    "RemoteBackend",
    "RemoteConfig",
    "Request",
    "ScriptedBackend",
    "TextSegment",
    "Transcript",
    "TriageOutcome",
    "canonical_hash",
    "parse_bbox",
    "parse_binary",
    "parse_candidates",
    "parse_decisive",
    "parse_merge_decisions",
    "parse_option",
    "parse_revise_verdicts",
    "parse_triage",
    "render_candidates",
    "render_merge_decisions",
    "render_triage",
]
