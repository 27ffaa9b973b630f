"""Model backends: the scripted replay backend and a remote HTTP client.

Every backend exposes ``complete(segments, deterministic=True) -> str`` and
a ``model`` name. The scripted backend looks responses up by the canonical
hash of the prompt; ``RecordingBackend`` wraps any backend and writes such a
transcript.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx

from ..errors import BudgetExceeded, GatewayError, NoScriptEntry, TransportError
from ..segments import MediaSegment, PromptSegment, TextSegment, canonical_hash

logger = logging.getLogger(__name__)


class Backend(Protocol):
    model: str

    def complete(self, segments: Sequence[PromptSegment], deterministic: bool = True) -> str: ...


def check_prompt(segments: Sequence[PromptSegment], media_limit: int | None) -> None:
    if not segments:
        raise ValueError("prompt has no segments")
    if media_limit is not None:
        n_media = sum(isinstance(s, MediaSegment) for s in segments)
        if n_media > media_limit:
            raise BudgetExceeded(f"prompt carries {n_media} media segments, limit is {media_limit}")


class Transcript:
    """Ordered prompt-key -> response mapping stored one record per line.

    File format: ``<sha256 hex>\\t<base64 utf-8 response>`` per line.
    """

    def __init__(self, entries: dict[str, str] | None = None):
        self._entries: dict[str, str] = dict(entries or {})
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def lookup(self, key: str) -> str:
        try:
            return self._entries[key]
        except KeyError:
            raise NoScriptEntry(key) from None

    def record(self, key: str, response: str) -> None:
        with self._lock:
            # first recording wins; replay must stay a function of the key
            self._entries.setdefault(key, response)

    def items(self):
        return list(self._entries.items())

    def dumps(self) -> str:
        return "".join(
            f"{k}\t{base64.b64encode(v.encode('utf-8')).decode('ascii')}\n" for k, v in self._entries.items()
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="ascii")
        return path

    @classmethod
    def load(cls, path: str | Path) -> Transcript:
        entries: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
            if not line.strip():
                continue
            try:
                key, payload = line.split("\t")
                text = base64.b64decode(payload, validate=True).decode("utf-8")
            except (ValueError, binascii.Error) as exc:
                raise GatewayError(f"{path}:{lineno}: malformed transcript record") from exc
            entries.setdefault(key, text)
        return cls(entries)


class ScriptedBackend:
    """Replays recorded responses keyed by canonical prompt hash."""

    def __init__(self, transcript: Transcript | str | Path, model: str = "scripted", media_limit: int | None = None):
        self.transcript = transcript if isinstance(transcript, Transcript) else Transcript.load(transcript)
        self.model = model
        self.media_limit = media_limit
        self.calls = 0

    def complete(self, segments: Sequence[PromptSegment], deterministic: bool = True) -> str:
        check_prompt(segments, self.media_limit)
        self.calls += 1
        return self.transcript.lookup(canonical_hash(segments))


class FunctionBackend:
    """Answers with a Python callable; handy for authoring fixtures."""

    def __init__(self, fn: Callable[[Sequence[PromptSegment]], str], model: str = "function", media_limit: int | None = None):
        self.fn = fn
        self.model = model
        self.media_limit = media_limit

    def complete(self, segments: Sequence[PromptSegment], deterministic: bool = True) -> str:
        check_prompt(segments, self.media_limit)
        return self.fn(segments)


class RecordingBackend:
    """Pass-through wrapper that records every exchange into a transcript."""

    def __init__(self, inner: Backend, transcript: Transcript | None = None):
        self.inner = inner
        self.transcript = transcript or Transcript()
        self.model = inner.model

    def complete(self, segments: Sequence[PromptSegment], deterministic: bool = True) -> str:
        response = self.inner.complete(segments, deterministic)
        self.transcript.record(canonical_hash(segments), response)
        return response


# -- remote service ---------------------------------------------------------


@dataclass
class RemoteConfig:
    endpoint: str
    model: str
    provider: str = "openai"
    media_limit: int | None = 64
    timeout: float = 120.0
    max_retries: int = 4
    backoff: float = 1.0
    max_backoff: float = 30.0
    api_key_env: str = "OPENAI_API_KEY"
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> RemoteConfig:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def _openai_payload(cfg: RemoteConfig, parts: list[tuple[str, str]], deterministic: bool) -> dict:
    content = []
    for kind, value in parts:
        if kind == "text":
            content.append({"type": "text", "text": value})
        else:
            content.append({"type": "image_url", "image_url": {"url": f"data:image/jpeg;base64,{value}"}})
    payload = {"model": cfg.model, "messages": [{"role": "user", "content": content}], **cfg.extra}
    if deterministic:
        payload["temperature"] = 0
    return payload


def _openai_text(body: dict) -> str:
    return body["choices"][0]["message"]["content"]


def _gemini_payload(cfg: RemoteConfig, parts: list[tuple[str, str]], deterministic: bool) -> dict:
    out = []
    for kind, value in parts:
        if kind == "text":
            out.append({"text": value})
        else:
            out.append({"inline_data": {"mime_type": "image/jpeg", "data": value}})
    payload = {"contents": [{"role": "user", "parts": out}], **cfg.extra}
    if deterministic:
        payload["generationConfig"] = {"temperature": 0}
    return payload


def _gemini_text(body: dict) -> str:
    return "".join(p.get("text", "") for p in body["candidates"][0]["content"]["parts"])


_ADAPTERS = {
    "openai": (_openai_payload, _openai_text),
    "gemini": (_gemini_payload, _gemini_text),
}

_RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


class RemoteBackend:
    """HTTP client for a hosted multimodal model.

    Frames are read from the media store and sent inline as JPEG. The API key
    comes from the environment variable named in the config.
    """

    def __init__(
        self,
        config: RemoteConfig,
        frame_reader: Callable[[str, int], bytes],
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if config.provider not in _ADAPTERS:
            raise ValueError(f"unknown provider {config.provider!r}; expected one of {sorted(_ADAPTERS)}")
        self.config = config
        self.model = config.model
        self.media_limit = config.media_limit
        self._read_frame = frame_reader
        self._client = client or httpx.Client(timeout=config.timeout)
        self._sleep = sleep

    def _url_and_headers(self) -> tuple[str, dict]:
        key = os.environ.get(self.config.api_key_env)
        if not key:
            raise GatewayError(f"environment variable {self.config.api_key_env} is not set")
        base = self.config.endpoint.rstrip("/")
        if self.config.provider == "openai":
            return f"{base}/chat/completions", {"Authorization": f"Bearer {key}"}
        return f"{base}/models/{self.config.model}:generateContent", {"x-goog-api-key": key}

    def _parts(self, segments: Sequence[PromptSegment]) -> list[tuple[str, str]]:
        parts: list[tuple[str, str]] = []
        for seg in segments:
            if isinstance(seg, TextSegment):
                parts.append(("text", seg.content))
            else:
                if seg.caption:
                    parts.append(("text", seg.caption))
                data = self._read_frame(seg.clip_id, seg.frame_index)
                parts.append(("image", base64.b64encode(data).decode("ascii")))
        return parts

    def complete(self, segments: Sequence[PromptSegment], deterministic: bool = True) -> str:
        check_prompt(segments, self.media_limit)
        build, extract = _ADAPTERS[self.config.provider]
        url, headers = self._url_and_headers()
        payload = build(self.config, self._parts(segments), deterministic)

        attempt = 0
        while True:
            try:
                return self._post(url, headers, payload, extract)
            except TransportError as exc:
                if attempt >= self.config.max_retries:
                    raise
                delay = min(self.config.backoff * (2 ** attempt), self.config.max_backoff)
                logger.warning("transport error (%s); retry %d in %.1fs", exc, attempt + 1, delay)
                self._sleep(delay)
                attempt += 1

    def _post(self, url: str, headers: dict, payload: dict, extract) -> str:
        try:
            resp = self._client.post(url, headers=headers, json=payload)
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code in _RETRY_STATUS:
            raise TransportError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return extract(resp.json())
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise GatewayError(f"unexpected response shape: {exc}") from exc
