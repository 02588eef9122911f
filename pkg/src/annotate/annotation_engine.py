"""
Main annotation engine.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import AbstractSet, Any, Dict, List, Optional, Sequence

from .. import __version__
from ..config import AnnotationConfig
from ..errors import ResponseParseError
from ..ingest import CallGraph, FunctionRecord, callees_of
from ..llm import LLMClient, parse_allocation_response
from ..prompts import PromptBuilder
from .mapper import map_findings_to_annotations
from .models import AnnotationSet, FunctionAnnotation
from .post_filter import post_filter

logger = logging.getLogger(__name__)


@dataclass
class FunctionOutcome:
    """Result of annotating a single function."""
    function: FunctionRecord
    annotation: Optional[FunctionAnnotation] = None
    diagnostics: List[str] = field(default_factory=list)

    @property
    def skipped(self) -> bool:
        return self.annotation is None


def metadata_timestamp(deterministic: bool) -> Optional[str]:
    """SOURCE_DATE_EPOCH if set, None for deterministic backends, else now (UTC)."""
    epoch = os.getenv("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    if deterministic:
        return None
    return datetime.now(timezone.utc).isoformat()


class AnnotationEngine:
    """
    Annotates C functions with allocation/deallocation tags.

    Orchestrates the per-function pipeline:
    1. Context collection from the call graph
    2. Initial query rendering and completion
    3. Answer parsing and slot mapping
    4. Optional post-filter of return allocations
    """

    def __init__(
        self,
        client: LLMClient,
        config: AnnotationConfig | None = None,
        builder: PromptBuilder | None = None,
        aggregate_types: AbstractSet[str] = frozenset(),
    ):
        self.client = client
        self.config = config or AnnotationConfig()
        self.builder = builder or PromptBuilder(self.config.prompt_dir)
        self.aggregate_types = frozenset(aggregate_types)

    def annotate_function(
        self,
        function: FunctionRecord,
        graph: CallGraph,
        functions: Dict[str, FunctionRecord],
    ) -> FunctionOutcome:
        """
        Run the pipeline for one function.

        Raises:
            BackendError: the backend is unavailable for the initial query
        """
        outcome = FunctionOutcome(function=function)
        context = callees_of(graph, functions, function.id, self.config.context_depth)
        prompt = self.builder.render_initial(function, context)
        raw = self.client.complete(prompt)

        try:
            findings = parse_allocation_response(raw)
        except ResponseParseError as e:
            message = f"{function.id}: unparseable answer, skipping: {e}"
            logger.warning(f"[ANNOTATE] ⚠️ {message}")
            outcome.diagnostics.append(message)
            return outcome

        annotation = map_findings_to_annotations(
            function,
            findings,
            alloc_qualifier=self.config.alloc_qualifier,
            free_qualifier=self.config.free_qualifier,
            diagnostics=outcome.diagnostics,
        )
        if self.config.post_filter:
            direct = callees_of(graph, functions, function.id, max(1, self.config.context_depth))
            annotation = post_filter(
                annotation,
                function,
                direct,
                self.client,
                self.aggregate_types,
                builder=self.builder,
                diagnostics=outcome.diagnostics,
            )
        outcome.annotation = annotation
        return outcome

    def annotate_corpus(self, functions: Sequence[FunctionRecord], graph: CallGraph) -> AnnotationSet:
        """
        Annotate every function and assemble the AnnotationSet.

        Per-function work runs concurrently; results are reduced in input
        order so the set does not depend on scheduling.
        """
        by_id = {f.id: f for f in functions}
        logger.info(
            f"[ANNOTATE] Annotating {len(functions)} functions "
            f"(context depth {self.config.context_depth}, post-filter {'on' if self.config.post_filter else 'off'})"
        )

        workers = max(1, self.client.max_in_flight)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda f: self.annotate_function(f, graph, by_id), functions))

        result = AnnotationSet()
        diagnostics: List[str] = []
        skipped = 0
        for outcome in outcomes:
            diagnostics.extend(outcome.diagnostics)
            if outcome.skipped:
                skipped += 1
                continue
            annotation = outcome.annotation
            assert annotation is not None
            if annotation.is_empty:
                continue
            if annotation.function_name in result:
                message = (
                    f"{annotation.function_id}: name {annotation.function_name} already annotated "
                    f"by {result.functions[annotation.function_name].function_id}, ignoring"
                )
                logger.warning(f"[ANNOTATE] ⚠️ {message}")
                diagnostics.append(message)
                continue
            result.add(annotation)

        result.metadata = self._metadata(len(functions), skipped, diagnostics)
        logger.info(f"[ANNOTATE] ✅ {len(result)} annotated, {skipped} skipped, {len(functions)} total")
        return result

    def _metadata(self, total: int, skipped: int, diagnostics: List[str]) -> Dict[str, Any]:
        return {
            "generator": f"memanno {__version__}",
            "model": self.client.config.model_name,
            "backend": self.client.backend.backend_id,
            "timestamp": metadata_timestamp(self.client.deterministic),
            "context_depth": self.config.context_depth,
            "post_filter": self.config.post_filter,
            "functions_total": total,
            "functions_skipped": skipped,
            "diagnostics": diagnostics,
        }


def annotate_corpus(
    functions: Sequence[FunctionRecord],
    graph: CallGraph,
    client: LLMClient,
    config: AnnotationConfig | None = None,
    aggregate_types: AbstractSet[str] = frozenset(),
) -> AnnotationSet:
    return AnnotationEngine(client, config, aggregate_types=aggregate_types).annotate_corpus(functions, graph)
