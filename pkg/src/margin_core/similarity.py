"""
Segmentation similarity: SI, OV, OF, EF against a manual reference mask.

SI = 2tp / (2tp + fp + fn), OV = tp / (tp + fp + fn), OF = tp / (tp + fn),
EF = fp / (tp + fn). A zero denominator yields ``None`` (undefined), never
an exception.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from margin_core.contracts import BinaryMask, ConfusionCounts, SimilarityScores
from margin_core.errors import SimilarityError

MEASURES = ("si", "ov", "of", "ef")


def confusion(auto: BinaryMask, manual: BinaryMask) -> ConfusionCounts:
    """Pixel confusion counts; *manual* is the reference."""
    if auto.shape != manual.shape:
        raise SimilarityError(f"mask shapes differ: {auto.shape} vs {manual.shape}")
    a, m = auto.bits, manual.bits
    tp = int(np.count_nonzero(a & m))
    fp = int(np.count_nonzero(a & ~m))
    fn = int(np.count_nonzero(~a & m))
    tn = a.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def scores(c: ConfusionCounts) -> SimilarityScores:
    return SimilarityScores(
        si=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        ov=_ratio(c.tp, c.tp + c.fp + c.fn),
        of=_ratio(c.tp, c.tp + c.fn),
        ef=_ratio(c.fp, c.tp + c.fn),
    )


@dataclass(frozen=True)
class ScoreSummary:
    """Dataset-level means over the cases where each measure is defined."""

    means: dict[str, float | None]
    case_count: int
    undefined_count: int


def summarize_scores(results: Iterable[SimilarityScores]) -> ScoreSummary:
    """Mean of each defined measure; a case with any undefined measure is counted as undefined."""
    collected: dict[str, list[float]] = {k: [] for k in MEASURES}
    cases = undefined = 0
    for s in results:
        cases += 1
        values = s.as_dict()
        if any(v is None for v in values.values()):
            undefined += 1
        for k, v in values.items():
            if v is not None:
                collected[k].append(v)
    means = {k: (float(np.mean(v)) if v else None) for k, v in collected.items()}
    return ScoreSummary(means=means, case_count=cases, undefined_count=undefined)
