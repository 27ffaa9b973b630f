"""Bank construction, query answering and the context-prompting baselines."""

from .construction import ConstructionLog, DecisionLog, DescriptionCache, ItemLog
from .core import ContextBankPipeline, PipelineConfig, default_owner
from .templates import TemplateSet
from .types import (
    FIVE_REGIMES,
    MAX,
    TASK_ORDER,
    BankMode,
    CallRecord,
    ContextItem,
    Modality,
    QueryInstance,
    QueryResult,
    QueryTrace,
    Regime,
    RegimeKind,
    Task,
)

__all__ = [
    "FIVE_REGIMES",
    "MAX",
    "TASK_ORDER",
    "BankMode",
    "CallRecord",
    "ConstructionLog",
    "ContextBankPipeline",
    "ContextItem",
    "DecisionLog",
    "DescriptionCache",
    "ItemLog",
    "Modality",
    "PipelineConfig",
    "QueryInstance",
    "QueryResult",
    "QueryTrace",
    "Regime",
    "RegimeKind",
    "Task",
    "TemplateSet",
    "default_owner",
]
