"""
Name/signature heuristic used as the baseline annotator.

A function is taken for an allocator when "alloc" occurs in its name, it
returns a pointer and it takes exactly one unsigned integer parameter.
"""

from __future__ import annotations

import logging
import re
from typing import Iterable

from ..ingest import FunctionRecord
from .models import (
    AnnotationEntry,
    AnnotationKind,
    AnnotationSet,
    AnnotationTarget,
    FunctionAnnotation,
    Provenance,
)

logger = logging.getLogger(__name__)

UNSIGNED_TYPES = frozenset({
    "size_t",
    "unsigned",
    "unsigned int",
    "unsigned long",
    "unsigned long int",
    "unsigned long long",
    "unsigned long long int",
    "uint8_t",
    "uint16_t",
    "uint32_t",
    "uint64_t",
    "uintptr_t",
})

_QUALIFIERS_RE = re.compile(r"\b(?:const|volatile)\b")


def _normalize_type(type_text: str) -> str:
    return " ".join(_QUALIFIERS_RE.sub(" ", type_text).split())


def codeql_name_heuristic(function: FunctionRecord) -> bool:
    if "alloc" not in function.name.lower():
        return False
    if "*" not in function.return_type_text:
        return False
    if len(function.params) != 1:
        return False
    return _normalize_type(function.params[0].type_text) in UNSIGNED_TYPES


def heuristic_annotations(functions: Iterable[FunctionRecord], qualifier: int = 1) -> AnnotationSet:
    """Annotate every function accepted by :func:`codeql_name_heuristic`."""
    result = AnnotationSet(metadata={"generator": "name-heuristic", "model": None, "timestamp": None})
    for function in functions:
        if not codeql_name_heuristic(function) or function.name in result:
            continue
        result.add(FunctionAnnotation(
            function_id=function.id,
            function_name=function.name,
            entries=(AnnotationEntry(AnnotationTarget.ret(), AnnotationKind.alloc_source(qualifier)),),
            provenance=Provenance.NAME_HEURISTIC,
            arity=function.arity,
        ))
    logger.info(f"[ANNOTATE] Name heuristic marked {len(result)} functions")
    return result
