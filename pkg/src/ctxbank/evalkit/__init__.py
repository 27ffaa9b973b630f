"""Manifest loading, metrics, statistics, the regime runner and reports."""

from .manifest import load_manifest, parse_manifest, task_counts
from .metrics import (
    acc_at_iou,
    egoid_score,
    format_number,
    format_percent,
    iou,
    macro_accuracy,
    mcq_accuracy,
)
from .records import PredictionRecord, read_records, records_csv, write_records
from .report import TaskScore, emit_report, render_report, render_table, score_records
from .runner import EvalRun, Failure, evaluate
from .stats import BankStats, QueryStats, bank_stats, query_stats, render_bank_stats, render_query_stats

__all__ = [
    "BankStats",
    "EvalRun",
    "Failure",
    "PredictionRecord",
    "QueryStats",
    "TaskScore",
    "acc_at_iou",
    "bank_stats",
    "egoid_score",
    "emit_report",
    "evaluate",
    "format_number",
    "format_percent",
    "iou",
    "load_manifest",
    "macro_accuracy",
    "mcq_accuracy",
    "parse_manifest",
    "query_stats",
    "read_records",
    "records_csv",
    "render_bank_stats",
    "render_query_stats",
    "render_report",
    "render_table",
    "score_records",
    "task_counts",
    "write_records",
]
