"""Precision/recall scoring and annotation-set comparison."""

from .scoring import (
    EvaluationReport,
    FunctionVerdict,
    IntersectionReport,
    intersect,
    kind_profile,
    score,
)
from .ground_truth import load_ground_truth

__all__ = [
    "EvaluationReport",
    "FunctionVerdict",
    "IntersectionReport",
    "intersect",
    "kind_profile",
    "score",
    "load_ground_truth",
]
