"""
CodeQL-style allocation model table.

Only return-value allocations are modelled; parameter allocations and sinks
are dropped and counted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

from ..annotate import AnnotationSet

logger = logging.getLogger(__name__)

EXTENSION_POINT = "semmle.code.cpp.models.interfaces.Allocation::AllocationFunction"
COLUMNS = ("function", "position", "kind")


@dataclass(frozen=True)
class CodeQLModelTable:
    rows: Tuple[Tuple[str, str, str], ...] = ()
    dropped: int = 0

    def to_text(self) -> str:
        lines = [
            "# memanno allocation models",
            f"# extension point: {EXTENSION_POINT}",
            "# columns: " + "\t".join(COLUMNS),
            f"# dropped entries: {self.dropped}",
        ]
        lines.extend("\t".join(row) for row in self.rows)
        return "\n".join(lines) + "\n"


def build_codeql_model_table(annotations: AnnotationSet) -> CodeQLModelTable:
    rows: List[Tuple[str, str, str]] = []
    dropped = 0
    for annotation in annotations:
        for entry in annotation.entries:
            if annotation.has_return_alloc and entry.target.is_return:
                rows.append((annotation.function_name, "ReturnValue", "allocation"))
            else:
                dropped += 1
    return CodeQLModelTable(rows=tuple(sorted(rows)), dropped=dropped)


def emit_codeql_models(annotations: AnnotationSet) -> bytes:
    table = build_codeql_model_table(annotations)
    logger.info(f"[EMIT] CodeQL models: {len(table.rows)} rows, {table.dropped} entries dropped")
    return table.to_text().encode("utf-8")
