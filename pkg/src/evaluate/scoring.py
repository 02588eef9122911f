"""
Scoring of predicted annotations against labels.

A prediction counts as correct when the function is marked the same way in
terms of allocating and deallocating (its kind profile). Predictions on
functions without a label are false positives.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

from ..annotate import AnnotationSet, AnnotationTag, FunctionAnnotation

logger = logging.getLogger(__name__)


class FunctionVerdict(str, Enum):
    TP = "TP"
    FP = "FP"
    FN = "FN"


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator > 0 else None


def _fmt(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.3f}"


@dataclass
class EvaluationReport:
    """Confusion counts plus precision/recall; None means undefined."""
    tp: int = 0
    fp: int = 0
    fn: int = 0
    precision: Optional[float] = None
    recall: Optional[float] = None
    total_annotated: int = 0
    per_function: Dict[str, FunctionVerdict] = field(default_factory=dict)

    @classmethod
    def from_counts(
        cls,
        tp: int,
        fp: int,
        fn: int,
        per_function: Dict[str, FunctionVerdict] | None = None,
    ) -> "EvaluationReport":
        if min(tp, fp, fn) < 0:
            raise ValueError("counts must be non-negative")
        return cls(
            tp=tp,
            fp=fp,
            fn=fn,
            precision=_ratio(tp, tp + fp),
            recall=_ratio(tp, tp + fn),
            total_annotated=tp + fp,
            per_function=dict(per_function or {}),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "total_annotated": self.total_annotated,
            "per_function": {name: v.value for name, v in sorted(self.per_function.items())},
        }

    def to_text(self) -> str:
        lines = [
            f"{'TP':>5} {'FP':>5} {'FN':>5} {'Prec':>9} {'Rec':>9} {'#':>5}",
            f"{self.tp:>5} {self.fp:>5} {self.fn:>5} {_fmt(self.precision):>9} {_fmt(self.recall):>9} {self.total_annotated:>5}",
        ]
        for verdict in (FunctionVerdict.FP, FunctionVerdict.FN):
            names = sorted(n for n, v in self.per_function.items() if v == verdict)
            if names:
                lines.append(f"{verdict.value}: {', '.join(names)}")
        return "\n".join(lines) + "\n"


def kind_profile(annotation: FunctionAnnotation) -> Tuple[bool, bool]:
    """(allocates?, deallocates?)"""
    tags = annotation.tags
    return AnnotationTag.ALLOC_SOURCE in tags, AnnotationTag.FREE_SINK in tags


def slot_profile(annotation: FunctionAnnotation) -> FrozenSet[Tuple[int, AnnotationTag]]:
    return frozenset((e.target.index, e.kind.tag) for e in annotation.entries)


def score(predicted: AnnotationSet, ground_truth: AnnotationSet, strict_slots: bool = False) -> EvaluationReport:
    """
    Compare a predicted set with a labelled set.

    Args:
        predicted: Annotations under evaluation
        ground_truth: Labels
        strict_slots: Require identical (slot, tag) pairs instead of the
            function-level kind profile

    Returns:
        EvaluationReport with per-function verdicts
    """
    profile = slot_profile if strict_slots else kind_profile
    verdicts: Dict[str, FunctionVerdict] = {}

    for name in sorted(set(predicted.functions) | set(ground_truth.functions)):
        pred = predicted.get(name)
        truth = ground_truth.get(name)
        if pred is not None and not pred.is_empty:
            if truth is not None and profile(pred) == profile(truth):
                verdicts[name] = FunctionVerdict.TP
            else:
                verdicts[name] = FunctionVerdict.FP
        elif truth is not None and not truth.is_empty:
            verdicts[name] = FunctionVerdict.FN

    counts = {v: 0 for v in FunctionVerdict}
    for verdict in verdicts.values():
        counts[verdict] += 1
    report = EvaluationReport.from_counts(
        counts[FunctionVerdict.TP], counts[FunctionVerdict.FP], counts[FunctionVerdict.FN], verdicts
    )
    logger.info(
        f"[SCORE] TP={report.tp} FP={report.fp} FN={report.fn} "
        f"precision={_fmt(report.precision)} recall={_fmt(report.recall)}"
    )
    return report


@dataclass(frozen=True)
class IntersectionReport:
    size_a: int
    size_b: int
    size_both: int
    only_a: List[str] = field(default_factory=list)
    only_b: List[str] = field(default_factory=list)
    both: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "a": self.size_a,
            "b": self.size_b,
            "both": self.size_both,
            "members": {"only_a": self.only_a, "only_b": self.only_b, "both": self.both},
        }

    def to_text(self) -> str:
        return f"A={self.size_a} B={self.size_b} A∩B={self.size_both}\n"


def intersect(a: AnnotationSet, b: AnnotationSet) -> IntersectionReport:
    """Compare two sets by annotated function names, ignoring kinds."""
    names_a, names_b = set(a.functions), set(b.functions)
    both = sorted(names_a & names_b)
    return IntersectionReport(
        size_a=len(names_a),
        size_b=len(names_b),
        size_both=len(both),
        only_a=sorted(names_a - names_b),
        only_b=sorted(names_b - names_a),
        both=both,
    )
