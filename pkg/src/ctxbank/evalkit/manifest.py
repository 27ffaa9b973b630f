"""Benchmark manifest loading with strict, path-reporting validation.

A manifest is a JSON document::

    {
      "schema_version": 1,
      "counts": {"EgoID": 2, ...},
      "instances": [
        {"instance_id": "ego-001", "task": "EgoID", "subject": "washing dishes",
         "query": {"clip_id": "q01", "modality": "video"},
         "context": [{"item_id": "ego-ref-1", "clip_id": "r01", "modality": "video"}],
         "gold": "Yes", "subset": "general"}
      ]
    }

``question`` and per-item ``declaration`` may be omitted; they are then
rendered from the template set using ``subject``. ``counts`` is optional and,
when present, must match the per-task instance counts.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from ..errors import SchemaError
from ..lmm.parsing import BoundingBox
from ..pipeline.templates import TemplateSet
from ..pipeline.types import ContextItem, Modality, QueryInstance, Task
from .metrics import BINARY_CLASSES, EGOID_SUBSETS, OPTIONS

MANIFEST_VERSION = 1

CONTEXT_TEMPLATE = {
    Task.PerID: "context_persons",
    Task.PerRel: "context_persons",
    Task.ObjID: "context_objects",
    Task.ObjDet: "context_objects",
    Task.BehErr: "context_beherr",
    Task.BehQA: "context_behqa",
    Task.EgoID: "context_egoid",
}
QUESTION_TEMPLATE = {
    Task.PerID: "question_perid",
    Task.ObjID: "question_objid",
    Task.ObjDet: "question_objdet",
    Task.BehErr: "question_beherr",
    Task.EgoID: "question_egoid",
}
SLOT = {"persons": "person", "objects": "object", "behavior": "step", "egoid": "action"}


class _Checker:
    def __init__(self, instance_id: str | None, base: str):
        self.instance_id = instance_id
        self.base = base

    def fail(self, path: str, message: str):
        raise SchemaError(self.instance_id, f"{self.base}.{path}" if path else self.base, message)

    def field(self, obj: dict, key: str, kind: type | tuple, path: str = "", required: bool = True) -> Any:
        where = f"{path}.{key}" if path else key
        if key not in obj or obj[key] is None:
            if required:
                self.fail(where, "missing required field")
            return None
        value = obj[key]
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            self.fail(where, f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
        if isinstance(value, str) and not value.strip():
            self.fail(where, "must be nonempty")
        return value


def _modality(c: _Checker, obj: dict, path: str) -> Modality:
    raw = c.field(obj, "modality", str, path)
    try:
        return Modality(raw)
    except ValueError:
        c.fail(f"{path}.modality", f"expected image or video, got {raw!r}")


def _gold(c: _Checker, task: Task, value: Any) -> str | BoundingBox:
    kind = task.answer_kind
    if kind == "bbox":
        if not (isinstance(value, list) and len(value) == 4 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            c.fail("gold", "ObjDet gold must be a list of 4 numbers [x1, y1, x2, y2]")
        if not all(math.isfinite(v) and v >= 0 for v in value):
            c.fail("gold", "box coordinates must be finite and non-negative")
        try:
            return BoundingBox(*(float(v) for v in value))
        except ValueError as exc:
            c.fail("gold", str(exc))
    allowed = OPTIONS if kind == "mcq" else BINARY_CLASSES
    if value not in allowed:
        c.fail("gold", f"expected one of {', '.join(allowed)}, got {value!r}")
    return value


def parse_instance(raw: Any, index: int, templates: TemplateSet) -> QueryInstance:
    if not isinstance(raw, dict):
        raise SchemaError(None, f"instances[{index}]", "expected an object")
    c = _Checker(None, f"instances[{index}]")
    instance_id = c.field(raw, "instance_id", str)
    c = _Checker(instance_id, f"instances[{index}]")
    task_name = c.field(raw, "task", str)
    try:
        task = Task(task_name)
    except ValueError:
        c.fail("task", f"unknown task {task_name!r}")
    subject = c.field(raw, "subject", str, required=False)
    slot = {SLOT[task.axis]: subject}

    query = c.field(raw, "query", dict)
    query_clip = c.field(query, "clip_id", str, "query")
    query_modality = _modality(c, query, "query")

    context_raw = c.field(raw, "context", list)
    if not context_raw:
        c.fail("context", "at least one context item is required")
    items = []
    for j, item in enumerate(context_raw):
        path = f"context[{j}]"
        if not isinstance(item, dict):
            c.fail(path, "expected an object")
        declaration = c.field(item, "declaration", str, path, required=False)
        item_subject = c.field(item, "subject", str, path, required=False) or subject
        if declaration is None:
            if item_subject is None:
                c.fail(f"{path}.declaration", "missing, and no subject to render it from")
            declaration = templates.text(CONTEXT_TEMPLATE[task], **{SLOT[task.axis]: item_subject})
        items.append(
            ContextItem(
                item_id=c.field(item, "item_id", str, path),
                clip_id=c.field(item, "clip_id", str, path),
                modality=_modality(c, item, path),
                declaration=declaration,
                subject=item_subject,
            )
        )

    question = c.field(raw, "question", str, required=False)
    if question is None:
        if task not in QUESTION_TEMPLATE:
            c.fail("question", f"{task.value} instances must state their question")
        if subject is None and task is not Task.EgoID:
            c.fail("question", "missing, and no subject to render it from")
        question = templates.text(QUESTION_TEMPLATE[task], **slot)

    options = c.field(raw, "options", list, required=False)
    if task.answer_kind == "mcq":
        if options is None or len(options) != 4:
            c.fail("options", f"{task.value} needs exactly 4 options, got {0 if options is None else len(options)}")
        for j, opt in enumerate(options):
            if not isinstance(opt, str) or not opt.strip():
                c.fail(f"options[{j}]", "options must be nonempty strings")
        options = tuple(options)
    elif options is not None:
        c.fail("options", f"{task.value} takes no options")

    subset = c.field(raw, "subset", str, required=False)
    if task is Task.EgoID:
        if subset not in EGOID_SUBSETS:
            c.fail("subset", f"EgoID instances need subset general or behavior-centric, got {subset!r}")
    elif subset is not None:
        c.fail("subset", "only EgoID instances carry a subset tag")

    if "gold" not in raw:
        c.fail("gold", "missing required field")
    gold = _gold(c, task, raw["gold"])

    return QueryInstance(
        instance_id=instance_id,
        task=task,
        question=question,
        query_clip=query_clip,
        query_modality=query_modality,
        context=tuple(items),
        gold=gold,
        options=options,
        subset=subset,
        subject=subject,
        owner_id=c.field(raw, "owner_id", str, required=False),
    )


def parse_manifest(doc: Any, templates: TemplateSet | None = None) -> list[QueryInstance]:
    templates = templates or TemplateSet.builtin()
    if not isinstance(doc, dict):
        raise SchemaError(None, "$", "manifest must be a JSON object")
    version = doc.get("schema_version")
    if version != MANIFEST_VERSION:
        raise SchemaError(None, "schema_version", f"expected {MANIFEST_VERSION}, got {version!r}")
    raw_instances = doc.get("instances")
    if not isinstance(raw_instances, list):
        raise SchemaError(None, "instances", "expected a list")
    instances = [parse_instance(r, i, templates) for i, r in enumerate(raw_instances)]

    seen: set[str] = set()
    for i, q in enumerate(instances):
        if q.instance_id in seen:
            raise SchemaError(q.instance_id, f"instances[{i}].instance_id", "duplicate instance id")
        seen.add(q.instance_id)

    counts = doc.get("counts")
    if counts is not None:
        if not isinstance(counts, dict):
            raise SchemaError(None, "counts", "expected an object of task -> count")
        actual = {t.value: 0 for t in Task}
        for q in instances:
            actual[q.task.value] += 1
        for name, n in counts.items():
            if name not in actual:
                raise SchemaError(None, f"counts.{name}", "unknown task")
            if n != actual[name]:
                raise SchemaError(None, f"counts.{name}", f"header says {n}, manifest has {actual[name]}")
        for name, n in actual.items():
            if n and name not in counts:
                raise SchemaError(None, f"counts.{name}", f"missing from header, manifest has {n}")
    return instances


def load_manifest(path: str | Path, templates: TemplateSet | None = None) -> list[QueryInstance]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(None, "$", f"not valid JSON: {exc}") from exc
    return parse_manifest(doc, templates)


def task_counts(instances: list[QueryInstance]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for q in instances:
        counts[q.task.value] = counts.get(q.task.value, 0) + 1
    return counts
