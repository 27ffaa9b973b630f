"""Prompt segments and the canonical prompt key used for transcript replay."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Union


@dataclass(frozen=True)
class TextSegment:
    content: str

    def __post_init__(self) -> None:
        if not self.content:
            raise ValueError("text segment must be nonempty")


@dataclass(frozen=True)
class MediaSegment:
    clip_id: str
    frame_index: int
    caption: str | None = None

    def __post_init__(self) -> None:
        if self.frame_index < 0:
            raise ValueError(f"negative frame index {self.frame_index}")


PromptSegment = Union[TextSegment, MediaSegment]


def text_of(segments: Iterable[PromptSegment]) -> str:
    """Concatenate the text segments, dropping media."""
    return "".join(s.content for s in segments if isinstance(s, TextSegment))


def media_of(segments: Iterable[PromptSegment]) -> list[MediaSegment]:
    return [s for s in segments if isinstance(s, MediaSegment)]


def canonical_form(segments: Iterable[PromptSegment]) -> bytes:
    # Captions are presentation only and deliberately excluded from the key.
    parts: list[list] = []
    for seg in segments:
        if isinstance(seg, TextSegment):
            parts.append(["text", seg.content])
        else:
            parts.append(["media", seg.clip_id, seg.frame_index])
    return json.dumps(parts, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def canonical_hash(segments: Iterable[PromptSegment]) -> str:
    return hashlib.sha256(canonical_form(segments)).hexdigest()


def segment_to_dict(seg: PromptSegment) -> dict:
    if isinstance(seg, TextSegment):
        return {"kind": "text", "content": seg.content}
    d = {"kind": "media", "clip_id": seg.clip_id, "frame_index": seg.frame_index}
    if seg.caption is not None:
        d["caption"] = seg.caption
    return d


def segment_from_dict(d: dict) -> PromptSegment:
    if d["kind"] == "text":
        return TextSegment(d["content"])
    return MediaSegment(d["clip_id"], int(d["frame_index"]), d.get("caption"))
