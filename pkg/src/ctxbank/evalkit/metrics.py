"""Task metrics.

Each metric has an exact variant returning a ``Fraction`` of 1 (used for
report rendering, so that half-up rounding is applied to the true value)
and a float percentage variant for programmatic use.
"""

from __future__ import annotations

import math
from decimal import Decimal
from fractions import Fraction
from typing import Optional, Sequence

from ..errors import EmptySet, MissingClass
from ..lmm.parsing import BoundingBox

BINARY_CLASSES = ("Yes", "No")
OPTIONS = ("A", "B", "C", "D")
EGOID_SUBSETS = ("general", "behavior-centric")


def _flags(invalid: Optional[Sequence[bool]], n: int) -> Sequence[bool]:
    if invalid is None:
        return [False] * n
    if len(invalid) != n:
        raise ValueError(f"{len(invalid)} invalid flags for {n} predictions")
    return invalid


def _check_lengths(preds: Sequence, golds: Sequence) -> None:
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions for {len(golds)} golds")


def macro_accuracy_exact(
    preds: Sequence[Optional[str]], golds: Sequence[str], invalid: Optional[Sequence[bool]] = None
) -> Fraction:
    _check_lengths(preds, golds)
    flags = _flags(invalid, len(preds))
    per_class = []
    for cls in BINARY_CLASSES:
        idx = [i for i, g in enumerate(golds) if g == cls]
        if not idx:
            raise MissingClass(f"no instances with gold {cls!r}")
        hits = sum(1 for i in idx if not flags[i] and preds[i] == cls)
        per_class.append(Fraction(hits, len(idx)))
    stray = {g for g in golds if g not in BINARY_CLASSES}
    if stray:
        raise ValueError(f"binary golds must be Yes/No, got {sorted(stray)}")
    return sum(per_class) / len(per_class)


def macro_accuracy(preds, golds, invalid=None) -> float:
    """Mean of the Yes and No per-class accuracies, as a percentage."""
    return float(macro_accuracy_exact(preds, golds, invalid) * 100)


def mcq_accuracy_exact(
    preds: Sequence[Optional[str]], golds: Sequence[str], invalid: Optional[Sequence[bool]] = None
) -> Fraction:
    _check_lengths(preds, golds)
    if not golds:
        raise EmptySet("mcq accuracy over zero instances")
    flags = _flags(invalid, len(preds))
    hits = sum(1 for p, g, bad in zip(preds, golds, flags) if not bad and p is not None and p == g)
    return Fraction(hits, len(golds))


def mcq_accuracy(preds, golds, invalid=None) -> float:
    """Share of exact option matches; invalid or missing answers count as wrong."""
    return float(mcq_accuracy_exact(preds, golds, invalid) * 100)


def _iou_exact(a: BoundingBox, b: BoundingBox) -> Fraction:
    ax1, ay1, ax2, ay2 = (Fraction(v) for v in a.as_tuple())
    bx1, by1, bx2, by2 = (Fraction(v) for v in b.as_tuple())
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return Fraction(0)
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def iou(a: BoundingBox, b: BoundingBox) -> float:
    return float(_iou_exact(a, b))


def acc_at_iou_exact(
    preds: Sequence[Optional[BoundingBox]], golds: Sequence[BoundingBox], threshold: float = 0.5
) -> Fraction:
    _check_lengths(preds, golds)
    if not golds:
        raise EmptySet("Acc@IoU over zero instances")
    t = Fraction(threshold)
    # a missing box (parse failure) scores IoU 0
    hits = sum(1 for p, g in zip(preds, golds) if p is not None and _iou_exact(p, g) >= t)
    return Fraction(hits, len(golds))


def acc_at_iou(preds, golds, threshold: float = 0.5) -> float:
    return float(acc_at_iou_exact(preds, golds, threshold) * 100)


def egoid_score_exact(
    preds: Sequence[Optional[str]],
    golds: Sequence[str],
    subsets: Sequence[str],
    invalid: Optional[Sequence[bool]] = None,
) -> Fraction:
    _check_lengths(preds, golds)
    _check_lengths(subsets, golds)
    bad = sorted({s for s in subsets if s not in EGOID_SUBSETS})
    if bad:
        raise ValueError(f"unknown wearer-identification subset tags: {bad}")
    # both subsets are pooled before the per-class accuracies are taken
    return macro_accuracy_exact(preds, golds, invalid)


def egoid_score(preds, golds, subsets, invalid=None) -> float:
    return float(egoid_score_exact(preds, golds, subsets, invalid) * 100)


def format_percent(value: Fraction | float, places: int = 2) -> str:
    """Render a fraction of 1 as a percentage, rounding half up."""
    return format_number(Fraction(value) * 100, places)


def format_number(value: Fraction | float, places: int = 2) -> str:
    v = Fraction(value)
    scaled = v * 10**places
    # half up, away from zero, on the exact value
    units = math.floor(abs(scaled) + Fraction(1, 2))
    sign = "-" if v < 0 and units else ""
    return sign + str(Decimal(units).scaleb(-places))
