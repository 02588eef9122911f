"""Positional function annotations, post-filter and baseline heuristic."""

from .models import (
    AnnotationEntry,
    AnnotationKind,
    AnnotationSet,
    AnnotationTag,
    AnnotationTarget,
    FunctionAnnotation,
    Provenance,
)
from .mapper import map_findings_to_annotations, returned_identifiers
from .post_filter import post_filter, struct_parameters
from .heuristics import codeql_name_heuristic, heuristic_annotations
from .annotation_engine import AnnotationEngine, FunctionOutcome, annotate_corpus, metadata_timestamp

__all__ = [
    "AnnotationEntry",
    "AnnotationKind",
    "AnnotationSet",
    "AnnotationTag",
    "AnnotationTarget",
    "FunctionAnnotation",
    "Provenance",
    "map_findings_to_annotations",
    "returned_identifiers",
    "post_filter",
    "struct_parameters",
    "codeql_name_heuristic",
    "heuristic_annotations",
    "AnnotationEngine",
    "FunctionOutcome",
    "annotate_corpus",
    "metadata_timestamp",
]
