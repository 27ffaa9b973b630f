"""Command-line entry points: ingest, build-bank, query, evaluate, report, stats."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from .bank import DecisionKind
from .errors import ConstructionError, CtxBankError
from .evalkit.manifest import load_manifest
from .evalkit.records import read_records
from .evalkit.report import emit_report, render_report
from .evalkit.runner import evaluate
from .evalkit.stats import bank_stats, query_stats, render_bank_stats, render_query_stats
from .lmm.backends import RecordingBackend, RemoteBackend, RemoteConfig, ScriptedBackend, Transcript
from .media import MediaStore, load_bank, save_bank
from .pipeline.construction import ConstructionLog, DescriptionCache
from .pipeline.core import ContextBankPipeline, PipelineConfig
from .pipeline.templates import TemplateSet
from .pipeline.types import FIVE_REGIMES, BankMode, ContextItem, Modality, QueryTrace, Regime

logger = logging.getLogger("ctxbank")

DEFAULT_REGIMES = ",".join([*(str(r) for r in FIVE_REGIMES), "bank:adaptive"])


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    backend: str = "scripted"
    transcript: str | None = None
    record: str | None = None
    model: str | None = None
    templates: str = "v1"
    span_frames: int = 4
    revise_fallback: str = "ADD"
    sample_frames: int = 16
    media_root: str = "media"
    out: str = "out"
    jobs: int = 1
    remote: dict | None = None

    def validate(self) -> None:
        if self.backend not in ("scripted", "remote"):
            raise UsageError(f"--backend must be scripted or remote, got {self.backend!r}")
        if self.backend == "scripted" and not self.transcript:
            raise UsageError("the scripted backend needs --transcript PATH")
        if self.backend == "remote" and not self.remote:
            raise UsageError("the remote backend needs a config file with a \"remote\" section (--config)")
        if self.span_frames < 2:
            raise UsageError("--span-frames must be at least 2")
        if self.revise_fallback.upper() not in ("ADD", "CONFIRM", "DROP"):
            raise UsageError("--revise-fallback must be ADD, CONFIRM or DROP")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> RunConfig:
        """Defaults, then the JSON config file, then explicit flags."""
        values: dict = {}
        if getattr(args, "config", None):
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
            known = {f.name for f in fields(cls)}
            unknown = sorted(set(data) - known)
            if unknown:
                raise UsageError(f"{args.config}: unknown keys {unknown}")
            values.update(data)
        for f in fields(cls):
            flag = getattr(args, f.name, None)
            if flag is not None:
                values[f.name] = flag
        cfg = cls(**values)
        cfg.validate()
        return cfg


def make_backend(cfg: RunConfig, store: MediaStore):
    if cfg.backend == "scripted":
        backend = ScriptedBackend(cfg.transcript, model=cfg.model or "scripted")
    else:
        remote = dict(cfg.remote)
        if cfg.model:
            remote["model"] = cfg.model
        backend = RemoteBackend(RemoteConfig(**remote), store.read_frame)
    if cfg.record:
        backend = RecordingBackend(backend, Transcript())
    return backend


def make_pipeline(cfg: RunConfig) -> ContextBankPipeline:
    store = MediaStore(cfg.media_root)
    return ContextBankPipeline(
        make_backend(cfg, store),
        store,
        TemplateSet.load(cfg.templates),
        PipelineConfig(cfg.span_frames, DecisionKind(cfg.revise_fallback.upper()), cfg.sample_frames),
        DescriptionCache(Path(cfg.out) / "descriptions.json"),
    )


def _finish_recording(cfg: RunConfig, pipeline: ContextBankPipeline) -> None:
    if cfg.record and isinstance(pipeline.backend, RecordingBackend):
        pipeline.backend.transcript.save(cfg.record)


def _write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def _write_traces(path: Path, traces: Sequence[QueryTrace]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(t.to_dict(), sort_keys=True, ensure_ascii=False) for t in traces]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def _read_traces(path: Path) -> list[QueryTrace]:
    return [QueryTrace.from_dict(json.loads(line)) for line in path.read_text(encoding="utf-8").splitlines() if line]


# -- commands ---------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    store = MediaStore(args.media_root or "media")
    source = Path(args.clips)
    if not source.is_dir():
        raise UsageError(f"{source} is not a directory")
    children = sorted(p for p in source.iterdir() if p.is_dir() or p.is_file())
    clips = [p for p in children if p.is_dir()] or children
    for path in clips:
        ref = store.ingest(path.stem if path.is_file() else path.name, path, args.sample)
        print(f"{ref.clip_id}\t{ref.frame_count} frames")
    return 0


def _load_items(path: Path) -> tuple[str | None, str, list[ContextItem]]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    try:
        items = [
            ContextItem(
                item_id=i["item_id"],
                clip_id=i["clip_id"],
                modality=Modality(i.get("modality", "video")),
                declaration=i["declaration"],
                subject=i.get("subject"),
            )
            for i in doc["items"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: malformed items file ({exc})") from exc
    return doc.get("owner_id"), doc.get("preset", "wearer"), items


def cmd_build_bank(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args)
    owner, preset, items = _load_items(Path(args.items))
    owner = args.owner or owner
    if not owner:
        raise UsageError("no owner id: pass --owner or set owner_id in the items file")
    pipeline = make_pipeline(cfg)
    try:
        if preset == "descriptions":
            axis = args.axis or "persons"
            bank, log = pipeline.build_description_bank(items, owner, axis)
        else:
            bank, log = pipeline.build_bank(items, owner, preset)
    finally:
        _finish_recording(cfg, pipeline)
    out = Path(cfg.out)
    bank_file = save_bank(bank, out / "banks" / f"{owner}.json")
    log.save(out / "logs" / f"{owner}.json")
    pipeline.descriptions.save()
    print(f"{bank_file}\t{len(bank.active_ids)} active entries")
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args)
    bank = load_bank(args.bank)
    instances = {q.instance_id: q for q in load_manifest(args.manifest, TemplateSet.load(cfg.templates))}
    if args.instance not in instances:
        raise UsageError(f"instance {args.instance!r} not in {args.manifest}")
    q = instances[args.instance]
    pipeline = make_pipeline(cfg)
    try:
        result = pipeline.answer_query(bank, q, BankMode(args.mode))
    finally:
        _finish_recording(cfg, pipeline)
    _write_json(Path(cfg.out) / "traces" / f"{q.instance_id}.{args.mode}.json", result.trace.to_dict())
    flag = " (invalid)" if result.invalid else ""
    print(f"{q.instance_id}\t{result.answer}{flag}\t{result.trace.n_calls} call(s)")
    return 0


def _parse_regimes(text: str) -> list[Regime]:
    try:
        return [Regime.parse(r) for r in text.split(",") if r.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args)
    regimes = _parse_regimes(args.regimes or DEFAULT_REGIMES)
    if not regimes:
        raise UsageError("--regimes is empty")
    instances = load_manifest(args.manifest, TemplateSet.load(cfg.templates))
    pipeline = make_pipeline(cfg)
    try:
        run = evaluate(pipeline, instances, regimes, cfg.jobs)
    finally:
        _finish_recording(cfg, pipeline)

    out = Path(cfg.out)
    _write_traces(out / "traces.jsonl", run.traces)
    for bank, log in pipeline.built_banks():
        save_bank(bank, out / "banks" / f"{bank.owner_id}.json")
        log.save(out / "logs" / f"{bank.owner_id}.json")
    pipeline.descriptions.save()
    if run.failures:
        _write_json(out / "failures.json", [f.__dict__ for f in run.failures])
        for f in run.failures:
            print(f"FAILED {f.instance_id} [{f.regime}]: {f.error}", file=sys.stderr)
    if run.records:
        report, _ = emit_report(run.records, out)
        print(report.read_text(encoding="utf-8"), end="")
    return 0 if run.ok else 1


def cmd_report(args: argparse.Namespace) -> int:
    src = Path(args.records)
    files = sorted(src.glob("*.csv")) if src.is_dir() else [src]
    if not files:
        raise UsageError(f"no prediction CSV files under {src}")
    records = [r for f in files for r in read_records(f)]
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.md"
    path.write_text(render_report(records), encoding="utf-8")
    print(path.read_text(encoding="utf-8"), end="")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    sections = []
    logs_dir = Path(args.logs)
    log_files = sorted(logs_dir.glob("*.json"))
    if log_files:
        logs = [ConstructionLog.load(p) for p in log_files]
        banks_dir = Path(args.banks) if args.banks else logs_dir.parent / "banks"
        banks = [load_bank(banks_dir / f"{log.owner_id}.json") for log in logs]
        sections.append(render_bank_stats(bank_stats(logs, banks)))
    if args.traces:
        traces = [t for t in _read_traces(Path(args.traces)) if t.regime == "bank:adaptive"]
        sections.append(render_query_stats(query_stats(traces)))
    if not sections:
        raise UsageError(f"no construction logs under {logs_dir} and no --traces given")
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "stats.md"
    path.write_text("\n".join(sections), encoding="utf-8")
    print(path.read_text(encoding="utf-8"), end="")
    return 0


# -- argument parsing ---------------------------------------------------------


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration; flags override its values")
    p.add_argument("--backend", choices=["scripted", "remote"])
    p.add_argument("--transcript", help="transcript file replayed by the scripted backend")
    p.add_argument("--record", help="also record every exchange into this transcript file")
    p.add_argument("--model", help="model name recorded in traces (and sent to the remote service)")
    p.add_argument("--templates", help="built-in template set id or a directory of overrides")
    p.add_argument("--span-frames", type=int, help="frames shown per behavior span (>= 2)")
    p.add_argument("--revise-fallback", help="what a withdrawn REVISE becomes: ADD, CONFIRM or DROP")
    p.add_argument("--media-root", help="media store root")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="concurrent backend calls during evaluation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxbank", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="copy frame directories (or videos) into the media store")
    p.add_argument("clips", help="directory holding one frame directory or video file per clip")
    p.add_argument("--media-root")
    p.add_argument("--sample", type=int, default=16, help="frames kept per clip (0 keeps all)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-bank", help="construct a bank from a context items file")
    p.add_argument("--items", required=True, help="JSON file with owner_id, preset and items")
    p.add_argument("--owner", help="owner id (overrides the items file)")
    p.add_argument("--axis", choices=["persons", "objects"], help="entity axis for the descriptions preset")
    _run_flags(p)
    p.set_defaults(func=cmd_build_bank)

    p = sub.add_parser("query", help="answer one manifest instance against a saved bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=[m.value for m in BankMode], default="adaptive")
    _run_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="run a manifest under a list of regimes and write the report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--regimes", help=f"comma-separated regimes (default {DEFAULT_REGIMES})")
    _run_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render the accuracy table from prediction CSV files")
    p.add_argument("records", help="a predictions CSV or a directory of them")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("stats", help="bank-construction and query-time statistics")
    p.add_argument("--logs", required=True, help="directory of construction logs")
    p.add_argument("--banks", help="directory of bank files (default: sibling banks/ directory)")
    p.add_argument("--traces", help="traces.jsonl from an evaluation run")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except ConstructionError as exc:
        for item_id, err in exc.failures.items():
            print(f"error: {item_id}: {err}", file=sys.stderr)
        return 1
    except (CtxBankError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
