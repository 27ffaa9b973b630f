"""On-disk media store: frame sampling, evidence resolution, bank files.

Layout under the store root::

    index.json                      clip_id -> frame_count (+ frame size)
    clips/<clip_id>/frame_00000.jpg ...
    banks/<owner_id>.json
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ._spacing import uniform_indices
from .bank import Bank, Evidence, FrameEvidence
from .errors import FrameOutOfRange, MediaError, SchemaVersionMismatch, UnknownClip
from .segments import MediaSegment

logger = logging.getLogger(__name__)

INDEX_VERSION = 1
BANK_SCHEMA_VERSION = 1
DEFAULT_SAMPLE = 16
IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}
VIDEO_SUFFIXES = {".mp4", ".mov", ".mkv", ".avi", ".webm"}


def sample_frames(total: int, n: int) -> list[int]:
    """Uniformly sample ``min(n, total)`` frame indices, endpoints included."""
    if total < 1 or n < 1:
        raise ValueError(f"total and n must be >= 1 (got total={total}, n={n})")
    return uniform_indices(0, total - 1, min(n, total))


@dataclass(frozen=True)
class ClipRef:
    clip_id: str
    path: Path
    frame_count: int
    width: int | None = None
    height: int | None = None

    def frame_path(self, index: int) -> Path:
        return self.path / f"frame_{index:05d}.jpg"


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    os.replace(tmp, path)


class MediaStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._index: dict[str, dict] | None = None

    @property
    def index_path(self) -> Path:
        return self.root / "index.json"

    def _load_index(self) -> dict[str, dict]:
        if self._index is None:
            if self.index_path.exists():
                data = json.loads(self.index_path.read_text(encoding="utf-8"))
                if data.get("schema_version") != INDEX_VERSION:
                    raise SchemaVersionMismatch(
                        f"{self.index_path}: index version {data.get('schema_version')}, expected {INDEX_VERSION}"
                    )
                self._index = data["clips"]
            else:
                self._index = {}
        return self._index

    def _save_index(self) -> None:
        _write_json(self.index_path, {"schema_version": INDEX_VERSION, "clips": self._load_index()})

    def clip_ids(self) -> list[str]:
        return sorted(self._load_index())

    def has_clip(self, clip_id: str) -> bool:
        return clip_id in self._load_index()

    def clip(self, clip_id: str) -> ClipRef:
        info = self._load_index().get(clip_id)
        if info is None:
            raise UnknownClip(clip_id)
        return ClipRef(
            clip_id=clip_id,
            path=self.root / "clips" / clip_id,
            frame_count=int(info["frame_count"]),
            width=info.get("width"),
            height=info.get("height"),
        )

    def register(self, clip_id: str, frame_count: int, width: int | None = None, height: int | None = None) -> ClipRef:
        """Record a clip in the index without touching frame files."""
        if frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        self._load_index()[clip_id] = {"frame_count": frame_count, "width": width, "height": height}
        self._save_index()
        return self.clip(clip_id)

    def ingest(self, clip_id: str, source: str | Path, sample: int | None = DEFAULT_SAMPLE) -> ClipRef:
        """Copy pre-extracted frames (a directory of images) into the store.

        A video file is first split into frames with ``ffmpeg``. When
        ``sample`` is set, only ``sample_frames(total, sample)`` frames are kept
        and renumbered from zero, so stored indices are post-sampling indices.
        """
        source = Path(source)
        if source.is_file() and source.suffix.lower() in VIDEO_SUFFIXES:
            with tempfile.TemporaryDirectory() as tmp:
                _extract_video(source, Path(tmp))
                return self.ingest(clip_id, tmp, sample)
        if source.is_file():
            files = [source]
        else:
            files = sorted(p for p in source.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not files:
            raise MediaError(f"no frames found in {source}")
        keep = sample_frames(len(files), sample) if sample else list(range(len(files)))

        from PIL import Image

        dest = self.root / "clips" / clip_id
        if dest.exists():
            shutil.rmtree(dest)
        dest.mkdir(parents=True)
        size = None
        for new_idx, src_idx in enumerate(keep):
            src = files[src_idx]
            out = dest / f"frame_{new_idx:05d}.jpg"
            with Image.open(src) as im:
                size = size or im.size
                if src.suffix.lower() in (".jpg", ".jpeg"):
                    shutil.copyfile(src, out)
                else:
                    im.convert("RGB").save(out, format="JPEG", quality=90)
        logger.info("ingested %s: %d of %d frames", clip_id, len(keep), len(files))
        return self.register(clip_id, len(keep), width=size[0], height=size[1])

    def resolve(self, evidence: Evidence) -> list[MediaSegment]:
        """Every frame an evidence item covers; callers downsample spans."""
        clip = self.clip(evidence.clip_id)
        if isinstance(evidence, FrameEvidence):
            frames = [evidence.frame_index]
        else:
            frames = list(range(evidence.start_frame, evidence.end_frame + 1))
        if frames[-1] >= clip.frame_count:
            raise FrameOutOfRange(f"{clip.clip_id} has {clip.frame_count} frames, asked for {frames[-1]}")
        return [MediaSegment(clip.clip_id, i) for i in frames]

    def check_frame(self, clip_id: str, frame_index: int) -> None:
        clip = self.clip(clip_id)
        if not 0 <= frame_index < clip.frame_count:
            raise FrameOutOfRange(f"{clip_id} has {clip.frame_count} frames, asked for {frame_index}")

    def sampled(self, clip_id: str, n: int = DEFAULT_SAMPLE) -> list[int]:
        return sample_frames(self.clip(clip_id).frame_count, n)

    def read_frame(self, clip_id: str, frame_index: int) -> bytes:
        self.check_frame(clip_id, frame_index)
        path = self.clip(clip_id).frame_path(frame_index)
        if not path.exists():
            raise MediaError(f"frame file missing: {path}")
        return path.read_bytes()

    def bank_path(self, owner_id: str) -> Path:
        return self.root / "banks" / f"{owner_id}.json"


def _extract_video(video: Path, out_dir: Path) -> None:
    ffmpeg = shutil.which("ffmpeg")
    if ffmpeg is None:
        raise MediaError(f"cannot ingest {video}: ffmpeg not found; pass a directory of extracted frames instead")
    cmd = [ffmpeg, "-loglevel", "error", "-i", str(video), str(out_dir / "frame_%05d.png")]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise MediaError(f"ffmpeg failed on {video}: {proc.stderr.strip()}")


def bank_bytes(bank: Bank) -> bytes:
    payload = {"schema_version": BANK_SCHEMA_VERSION, **bank.to_dict()}
    return (json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def save_bank(bank: Bank, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(bank_bytes(bank))
    return path


def load_bank(path: str | Path) -> Bank:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != BANK_SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: bank schema version {data.get('schema_version')!r}, expected {BANK_SCHEMA_VERSION}"
        )
    return Bank.from_dict(data)


def media_segments(clip_id: str, frames: Sequence[int], label: str = "frame") -> list[MediaSegment]:
    return [MediaSegment(clip_id, i, caption=f"{label} {i}") for i in frames]
