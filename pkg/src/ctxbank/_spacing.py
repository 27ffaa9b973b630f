from __future__ import annotations


def round_half_up_ratio(num: int, den: int) -> int:
    """Round ``num / den`` to the nearest integer, ties upward (den > 0, num >= 0)."""
    return (2 * num + den) // (2 * den)


def uniform_indices(start: int, end: int, k: int) -> list[int]:
    """k endpoint-inclusive, uniformly spaced integers in [start, end], deduplicated."""
    if k <= 0:
        return []
    if k == 1 or start == end:
        return [start]
    span = end - start
    out: list[int] = []
    for i in range(k):
        idx = start + round_half_up_ratio(i * span, k - 1)
        if not out or idx != out[-1]:
            out.append(idx)
    return out
