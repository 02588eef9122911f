"""
Map the variables named by the model onto positional slots.

Only variables that leave the function are annotated: a returned variable
becomes a Return AllocSource, a parameter written through (``*p = ...``)
becomes a Param AllocSource and a released parameter becomes a Param
FreeSink. Allocations that stay local produce nothing.
"""

from __future__ import annotations

import logging
import re
from typing import Dict, List, Optional, Set

from ..ingest import FunctionRecord
from ..ingest.c_tokenizer import mask_source
from ..llm import AllocationFindings
from .models import (
    AnnotationEntry,
    AnnotationKind,
    AnnotationTarget,
    FunctionAnnotation,
    Provenance,
)

logger = logging.getLogger(__name__)

RETURN_IDENT_RE = re.compile(r"\breturn\s*\(?\s*([A-Za-z_]\w*)\s*\)?\s*;")


def returned_identifiers(function: FunctionRecord) -> Set[str]:
    """Identifiers appearing as ``return x;`` or ``return (x);`` in the body."""
    return set(RETURN_IDENT_RE.findall(mask_source(function.body)))


def _deref_assigned(masked_body: str, name: str) -> bool:
    pattern = rf"\*\s*\(?\s*{re.escape(name)}\s*\)?\s*=(?!=)"
    return re.search(pattern, masked_body) is not None


def map_findings_to_annotations(
    function: FunctionRecord,
    findings: AllocationFindings,
    alloc_qualifier: int = 1,
    free_qualifier: int = 3,
    diagnostics: Optional[List[str]] = None,
) -> FunctionAnnotation:
    """
    Convert parsed model findings into a FunctionAnnotation.

    Args:
        function: The annotated function
        findings: Parsed answer to the initial query
        alloc_qualifier: Qualifier for AllocSource entries
        free_qualifier: Qualifier for FreeSink entries
        diagnostics: Receives a message for each dropped conflict

    Returns:
        FunctionAnnotation with provenance LLM (possibly empty)
    """
    masked = mask_source(function.body)
    returned = returned_identifiers(function)
    param_index = {name: i for i, name in enumerate(function.param_names, start=1) if name}

    alloc_targets: Set[AnnotationTarget] = set()
    for var in findings.allocated_variables:
        if var in returned:
            alloc_targets.add(AnnotationTarget.ret())
        elif var in param_index and _deref_assigned(masked, var):
            alloc_targets.add(AnnotationTarget.param(param_index[var]))

    free_targets = {
        AnnotationTarget.param(param_index[var])
        for var in findings.deallocated_variables
        if var in param_index
    }

    conflicts = alloc_targets & free_targets
    for target in sorted(conflicts):
        message = f"{function.id}: both AllocSource and FreeSink on {target}, dropping both"
        logger.warning(f"[ANNOTATE] ⚠️ {message}")
        if diagnostics is not None:
            diagnostics.append(message)

    entries: Dict[AnnotationTarget, AnnotationKind] = {}
    for target in alloc_targets - conflicts:
        entries[target] = AnnotationKind.alloc_source(alloc_qualifier)
    for target in free_targets - conflicts:
        entries[target] = AnnotationKind.free_sink(free_qualifier)

    return FunctionAnnotation(
        function_id=function.id,
        function_name=function.name,
        entries=tuple(AnnotationEntry(t, k) for t, k in entries.items()),
        provenance=Provenance.LLM,
        arity=function.arity,
    )
