"""Run instances through a set of regimes and collect prediction records."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import CtxBankError
from ..pipeline.core import ContextBankPipeline
from ..pipeline.types import QueryInstance, QueryTrace, Regime
from .records import PredictionRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Failure:
    instance_id: str
    regime: str
    error: str


@dataclass
class EvalRun:
    records: list[PredictionRecord] = field(default_factory=list)
    traces: list[QueryTrace] = field(default_factory=list)
    failures: list[Failure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def evaluate(
    pipeline: ContextBankPipeline,
    instances: Sequence[QueryInstance],
    regimes: Sequence[Regime],
    jobs: int = 1,
) -> EvalRun:
    """Answer every instance under every regime.

    Work items run on up to ``jobs`` threads but results are always
    assembled in (regime, manifest) order, so outputs do not depend on
    scheduling. Errors raised for one instance are recorded as hard failures
    and do not stop the run.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    work = [(regime, q) for regime in regimes for q in instances]

    def run_one(item: tuple[Regime, QueryInstance]):
        regime, q = item
        try:
            return pipeline.run_regime(q, regime)
        except (CtxBankError, ValueError, OSError) as exc:
            logger.error("%s under %s failed: %s", q.instance_id, regime, exc)
            return Failure(q.instance_id, str(regime), f"{type(exc).__name__}: {exc}")

    if jobs == 1:
        outcomes = [run_one(w) for w in work]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_one, work))

    run = EvalRun()
    for (regime, q), outcome in zip(work, outcomes):
        if isinstance(outcome, Failure):
            run.failures.append(outcome)
            continue
        run.records.append(PredictionRecord.from_result(q, str(regime), outcome))
        run.traces.append(outcome.trace)
    return run
