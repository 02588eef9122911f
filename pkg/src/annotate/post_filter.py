"""
Post-filter for return-value allocations.

A function that returns a pointer into one of its struct arguments (a
getter) looks like an allocator to the initial query. For such functions
the model is asked a second, narrower question per struct parameter, and a
positive answer removes the Return AllocSource entry.
"""

from __future__ import annotations

import logging
import re
from typing import AbstractSet, List, Optional, Sequence, Tuple

from ..errors import AnnotationError, BackendError, PromptError
from ..ingest import FunctionRecord
from ..llm import LLMClient, Verdict, parse_postfilter_response
from ..prompts import PromptBuilder, default_builder
from .models import AnnotationTag, FunctionAnnotation, Provenance

logger = logging.getLogger(__name__)

STRUCT_POINTER_RE = re.compile(r"\b(?:struct|union)\s+([A-Za-z_]\w*)\s*\*")
QUALIFIER_RE = re.compile(r"\b(?:const|volatile|restrict)\b")


def struct_parameters(
    function: FunctionRecord,
    aggregate_types: AbstractSet[str] = frozenset(),
) -> List[Tuple[str, str]]:
    """(structure name, parameter name) for each pointer-to-aggregate parameter."""
    found: List[Tuple[str, str]] = []
    for param in function.params:
        if not param.name:
            continue
        match = STRUCT_POINTER_RE.search(param.type_text)
        if match:
            found.append((match.group(1), param.name))
            continue
        if "*" in param.type_text:
            base = QUALIFIER_RE.sub("", param.type_text).replace("*", " ").split()
            if len(base) == 1 and base[0] in aggregate_types:
                found.append((base[0], param.name))
    return found


def post_filter(
    annotation: FunctionAnnotation,
    function: FunctionRecord,
    callees: Sequence[FunctionRecord],
    client: LLMClient,
    aggregate_types: AbstractSet[str] = frozenset(),
    builder: PromptBuilder | None = None,
    diagnostics: Optional[List[str]] = None,
) -> FunctionAnnotation:
    """
    Drop the Return AllocSource of functions that return a pointer into an
    argument structure.

    Only applies to annotations with a Return AllocSource on functions with
    at least one struct pointer parameter; anything else is returned as is.
    FreeSink and Param entries are never touched.

    Raises:
        AnnotationError: annotation was not produced by the initial query
    """
    if annotation.provenance != Provenance.LLM:
        raise AnnotationError(
            f"post_filter expects an LLM annotation, got {annotation.provenance.value} for {function.name}"
        )
    candidates = struct_parameters(function, aggregate_types)
    if not annotation.has_return_alloc or not candidates:
        return annotation

    builder = builder or default_builder()
    for structure, variable in candidates:
        try:
            prompt = builder.render_postfilter(function, callees, structure, variable)
            verdict = parse_postfilter_response(client.complete(prompt)).points_into_argument
        except (BackendError, PromptError) as e:
            message = f"{function.id}: post-filter query failed, keeping annotation: {e}"
            logger.warning(f"[POST-FILTER] ⚠️ {message}")
            if diagnostics is not None:
                diagnostics.append(message)
            return annotation

        logger.debug(f"[POST-FILTER] {function.name}({structure} *{variable}) -> {verdict.value}")
        if verdict == Verdict.YES:
            kept = [
                e for e in annotation.entries
                if not (e.target.is_return and e.kind.tag == AnnotationTag.ALLOC_SOURCE)
            ]
            logger.info(f"[POST-FILTER] Removed return allocation of {function.name} (points into {variable})")
            return annotation.with_entries(kept, Provenance.LLM_POST_FILTERED)

    return annotation.with_entries(annotation.entries, Provenance.LLM_POST_FILTERED)
