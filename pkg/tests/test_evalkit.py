from __future__ import annotations

import copy
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import helpers
from ctxbank.errors import EmptyLog, EmptySet, MissingClass, SchemaError
from ctxbank.evalkit.manifest import parse_manifest, task_counts
from ctxbank.evalkit.metrics import (
    acc_at_iou,
    egoid_score,
    egoid_score_exact,
    format_number,
    format_percent,
    iou,
    macro_accuracy,
    mcq_accuracy,
)
from ctxbank.evalkit.records import PredictionRecord, read_records, records_csv, write_records
from ctxbank.evalkit.report import render_report, score_records
from ctxbank.evalkit.runner import evaluate
from ctxbank.evalkit.stats import bank_stats, query_stats, render_bank_stats, render_query_stats
from ctxbank.lmm.backends import FunctionBackend
from ctxbank.lmm.parsing import BoundingBox
from ctxbank.pipeline.core import ContextBankPipeline
from ctxbank.pipeline.types import FIVE_REGIMES, QueryTrace, Regime, Task

# -- metrics ----------------------------------------------------------------


def test_metric_examples():
    assert macro_accuracy(["Yes", "No"], ["Yes", "No"]) == 100.0
    assert macro_accuracy(["Yes", "Yes", "Yes", "Yes"], ["Yes", "Yes", "Yes", "No"]) == 50.0
    assert mcq_accuracy(["A", "B", "C", "D", "A", "B"], ["A", "B", "C", "D", "A", "C"]) == pytest.approx(83.333333333)
    assert iou(BoundingBox(0, 0, 10, 10), BoundingBox(5, 0, 15, 10)) == pytest.approx(1 / 3)
    assert iou(BoundingBox(0, 0, 1, 1), BoundingBox(2, 2, 3, 3)) == 0
    assert acc_at_iou([BoundingBox(0, 0, 10, 10), None], [BoundingBox(0, 0, 10, 10)] * 2) == 50.0


def test_metric_errors():
    with pytest.raises(MissingClass):
        macro_accuracy(["Yes"], ["Yes"])
    with pytest.raises(EmptySet):
        mcq_accuracy([], [])
    with pytest.raises(EmptySet):
        acc_at_iou([], [])
    with pytest.raises(ValueError):
        macro_accuracy(["Yes"], ["Yes", "No"])
    with pytest.raises(ValueError):
        egoid_score(["Yes", "No"], ["Yes", "No"], ["general", "hard"])


def test_invalid_predictions_count_as_wrong():
    assert macro_accuracy(["No", "No"], ["Yes", "No"], invalid=[False, True]) == 0.0
    assert mcq_accuracy(["A", None], ["A", "B"], invalid=[False, True]) == 50.0


def test_egoid_pools_subsets():
    # pooling differs from averaging the two subset scores
    preds = ["Yes", "Yes", "No", "No", "Yes", "No"]
    golds = ["Yes", "No", "No", "Yes", "Yes", "No"]
    subsets = ["general", "general", "general", "general", "behavior-centric", "behavior-centric"]
    assert egoid_score_exact(preds, golds, subsets) == Fraction(2, 3)


def test_rounding_is_half_up_on_exact_values():
    assert format_percent(Fraction(1, 3)) == "33.33"
    assert format_percent(Fraction(1, 8)) == "12.50"
    assert format_number(Fraction(5, 1000), 2) == "0.01"
    assert format_number(Fraction(2, 3), 3) == "0.667"
    assert format_number(Fraction(-1, 200), 2) == "-0.01"
    assert format_percent(Fraction(223, 604) + Fraction(154, 624)) == "61.60"


def oracle_macro(preds, golds, invalid):
    # independent: count per class with plain loops and floats
    acc = []
    for cls in ("Yes", "No"):
        total = correct = 0
        for p, g, bad in zip(preds, golds, invalid):
            if g == cls:
                total += 1
                correct += (p == g and not bad)
        acc.append(correct / total)
    return 100 * (acc[0] + acc[1]) / 2


@settings(max_examples=150)
@given(st.lists(st.tuples(st.sampled_from(["Yes", "No"]), st.sampled_from(["Yes", "No"]), st.booleans()), min_size=2, max_size=60))
def test_macro_accuracy_oracle(rows):
    golds = [g for g, _, _ in rows]
    if len(set(golds)) < 2:
        return
    preds = [p for _, p, _ in rows]
    invalid = [b for _, _, b in rows]
    assert abs(macro_accuracy(preds, golds, invalid) - oracle_macro(preds, golds, invalid)) <= 1e-9
    perm = list(range(len(rows)))
    random.Random(len(rows)).shuffle(perm)
    assert macro_accuracy([preds[i] for i in perm], [golds[i] for i in perm], [invalid[i] for i in perm]) == \
        macro_accuracy(preds, golds, invalid)


@settings(max_examples=100)
@given(st.integers(1, 30), st.lists(st.booleans(), min_size=60, max_size=60))
def test_balanced_macro_equals_plain_accuracy(n, hits):
    golds = ["Yes"] * n + ["No"] * n
    preds = [g if hits[i] else ("No" if g == "Yes" else "Yes") for i, g in enumerate(golds)]
    plain = 100 * sum(p == g for p, g in zip(preds, golds)) / len(golds)
    assert macro_accuracy(preds, golds) == pytest.approx(plain, abs=1e-9)


# -- manifest ---------------------------------------------------------------


def test_manifest12_counts(templates):
    instances = parse_manifest(helpers.manifest12(), templates)
    assert task_counts(instances) == helpers.manifest12()["counts"]
    q = instances[0]
    assert q.question and q.context[0].declaration  # rendered from templates
    assert instances[5].gold == BoundingBox(16, 12, 48, 36)


def _broken(mutate):
    doc = copy.deepcopy(helpers.manifest12())
    mutate(doc)
    return doc


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d["instances"][8].__setitem__("options", ["a", "b", "c"]), "options"),
        (lambda d: d["instances"][0].__setitem__("gold", "yes please"), "gold"),
        (lambda d: d["instances"][2].__setitem__("gold", "E"), "gold"),
        (lambda d: d["instances"][5].__setitem__("gold", [1, 2, 3]), "gold"),
        (lambda d: d["instances"][9].pop("subset"), "subset"),
        (lambda d: d["instances"][0].__setitem__("subset", "general"), "subset"),
        (lambda d: d["instances"][1].__setitem__("instance_id", "per-001"), "instance_id"),
        (lambda d: d["counts"].__setitem__("EgoID", 4), "counts"),
        (lambda d: d["instances"][0]["query"].__setitem__("modality", "audio"), "modality"),
    ],
)
def test_manifest_validation(templates, mutate, path):
    with pytest.raises(SchemaError) as info:
        parse_manifest(_broken(mutate), templates)
    assert path in str(info.value)


# -- records and report -----------------------------------------------------


def test_records_round_trip(tmp_path):
    records = helpers.egoid_predictions()[:20] + helpers.small_predictions()
    path = write_records(tmp_path / "p.csv", records)
    assert read_records(path) == records
    assert path.read_text(encoding="utf-8") == records_csv(records)


def test_report_matches_golden():
    records = helpers.egoid_predictions() + helpers.small_predictions()
    golden = (helpers.FIXTURES / "report.golden.md").read_text(encoding="utf-8")
    assert render_report(records) == golden


def test_report_egoid_cell_against_oracle():
    records = helpers.egoid_predictions()
    score = score_records(records)[("model-a", "bank:adaptive")][Task.EgoID]
    oracle = oracle_macro([r.pred for r in records], [r.gold for r in records], [r.invalid for r in records])
    assert abs(float(score.value) * 100 - oracle) <= 1e-9
    assert format_percent(score.value) == "61.60"


# -- statistics -------------------------------------------------------------


def test_bank_stats_fixture():
    log, bank = helpers.stats_fixture()
    s = bank_stats([log], [bank])
    assert s.cues_per_clip == 3 and s.n_entries == 10
    assert format_number(s.compression, 3) == "0.667"
    assert s.revision_share == Fraction(4, 14)
    assert s.updated_share == Fraction(3, 10)
    table = render_bank_stats(s)
    assert "| 1 | 3.00 | 10.00 |" in table and "0.667" in table and "28.57" in table
    with pytest.raises(EmptyLog):
        bank_stats([], [])


def _trace(requested, decisive, types):
    t = QueryTrace("q", "EgoID", "bank:adaptive", "m", "v1", requested_ids=requested, decisive_ids=decisive)
    t.entry_types = dict(zip(requested, types))
    return t


def test_query_stats():
    traces = [
        _trace(["e_001", "e_004"], ["e_001"], ["appearance", "owned_objects"]),
        _trace([], [], []),
        _trace(["e_003"], [], ["behavior"]),
        _trace([], [], []),
    ]
    s = query_stats(traces)
    assert s.request_rate == Fraction(1, 2)
    assert s.requested == Fraction(3, 2) and s.decisive == Fraction(1, 2)
    assert s.requested_split == {"appearance": Fraction(1, 3), "owned_objects": Fraction(1, 3), "behavior": Fraction(1, 3)}
    assert s.decisive_split["appearance"] == 1
    assert "| 4 | 50.00 | 1.50 | 0.50 | 33.3/33.3/33.3 | 100.0/0.0/0.0 |" in render_query_stats(s)
    with pytest.raises(EmptyLog):
        query_stats([])


# -- runner -----------------------------------------------------------------


def test_runner_is_order_stable_under_threads(store, templates):
    instances = parse_manifest(helpers.manifest12(), templates)
    regimes = list(FIVE_REGIMES) + [Regime.parse("bank:adaptive")]
    outputs = []
    for jobs in (1, 4):
        pipe = ContextBankPipeline(FunctionBackend(helpers.m12_responder, model="scripted"), store, templates)
        run = evaluate(pipe, instances, regimes, jobs=jobs)
        assert run.ok and len(run.records) == 72
        outputs.append(records_csv(run.records))
    assert outputs[0] == outputs[1]


def test_runner_records_failures(store, templates):
    instances = parse_manifest(helpers.manifest12(), templates)
    pipe = ContextBankPipeline(FunctionBackend(lambda s: "unreadable", model="scripted"), store, templates)
    run = evaluate(pipe, instances, [Regime.parse("bank:adaptive"), Regime.parse("no-context")])
    assert not run.ok
    # only bank builds can fail; baseline answers fall back instead
    assert {f.regime for f in run.failures} == {"bank:adaptive"}
    assert len(run.records) == 12 + (12 - len(run.failures))
    assert all(isinstance(r, PredictionRecord) for r in run.records)
