"""Prompt templates: versioned text assets with ``[name]`` placeholders.

A placeholder value is either a string, spliced into the surrounding text,
or a list of prompt segments (frames, an inline-evidence bank view), which
breaks the text and is inserted in place. Substitution is a single pass over
the template, so substituted content is never re-scanned.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Union

from ..errors import TemplateError
from ..segments import PromptSegment, TextSegment

_PLACEHOLDER_RE = re.compile(r"\[([A-Za-z][A-Za-z0-9_ ]*)\]")

Value = Union[str, int, list]


class TemplateSet:
    def __init__(self, set_id: str, texts: dict[str, str]):
        self.set_id = set_id
        self.texts = texts

    @classmethod
    def builtin(cls, set_id: str = "v1") -> TemplateSet:
        root = resources.files("ctxbank") / "templates" / set_id
        if not root.is_dir():
            raise TemplateError(f"no built-in template set {set_id!r}")
        texts = {p.name[:-4]: p.read_text(encoding="utf-8") for p in root.iterdir() if p.name.endswith(".txt")}
        return cls(set_id, texts)

    @classmethod
    def load(cls, spec: str | Path) -> TemplateSet:
        """A built-in set id, or a directory of ``*.txt`` files (id = dir name)."""
        path = Path(spec)
        if path.is_dir():
            texts = {p.stem: p.read_text(encoding="utf-8") for p in sorted(path.glob("*.txt"))}
            base = cls.builtin()
            return cls(path.name, {**base.texts, **texts})
        return cls.builtin(str(spec))

    def raw(self, name: str) -> str:
        try:
            text = self.texts[name]
        except KeyError:
            raise TemplateError(f"template {name!r} not in set {self.set_id!r}") from None
        return text[:-1] if text.endswith("\n") else text

    def render(self, name: str, **values: Value) -> list[PromptSegment]:
        template = self.raw(name)
        segments: list[PromptSegment] = []
        buf: list[str] = []

        def flush() -> None:
            text = "".join(buf)
            buf.clear()
            if text.strip():
                segments.append(TextSegment(text))

        pos = 0
        for m in _PLACEHOLDER_RE.finditer(template):
            buf.append(template[pos:m.start()])
            pos = m.end()
            key = m.group(1).replace(" ", "_")
            if key not in values:
                raise TemplateError(f"template {name!r} needs a value for [{m.group(1)}]")
            value = values[key]
            if isinstance(value, list):
                flush()
                segments.extend(value)
            else:
                buf.append(str(value))
        buf.append(template[pos:])
        flush()
        return segments

    def text(self, name: str, **values: Value) -> str:
        segments = self.render(name, **values)
        if any(not isinstance(s, TextSegment) for s in segments):
            raise TemplateError(f"template {name!r} rendered media where text was expected")
        return "".join(s.content for s in segments)
