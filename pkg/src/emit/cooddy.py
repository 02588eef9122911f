"""
Cooddy annotation JSON.

Each annotated function becomes ``"name(name)": [[return...], [param1...], ...]``
with one list per parameter. Output is UTF-8, 2-space indented, sorted by
key and terminated by a newline, so identical sets give identical bytes.
"""

from __future__ import annotations

import json
import logging
import re
from typing import Any, Dict, List, Mapping, Optional

from ..errors import AnnotationError, EmitError
from ..annotate import (
    AnnotationEntry,
    AnnotationKind,
    AnnotationSet,
    AnnotationTarget,
    FunctionAnnotation,
    Provenance,
)

logger = logging.getLogger(__name__)

COODDY_KEY_RE = re.compile(r"^([A-Za-z_]\w*)\((.*)\)$")


def cooddy_key(name: str) -> str:
    return f"{name}({name})"


def _positional_lists(annotation: FunctionAnnotation, arity: int) -> List[List[str]]:
    slots: List[List[str]] = [[] for _ in range(arity + 1)]
    for entry in annotation.entries:
        slots[entry.target.index].append(str(entry.kind))
    return slots


def emit_cooddy(annotations: AnnotationSet, arities: Optional[Mapping[str, int]] = None) -> bytes:
    """
    Serialize an AnnotationSet as a Cooddy annotation document.

    Args:
        annotations: Set to serialize
        arities: Parameter counts by function name; falls back to the
            arity stored in each annotation

    Raises:
        EmitError: some annotated names have no known arity
    """
    arities = arities or {}
    document: Dict[str, List[List[str]]] = {}
    unknown: List[str] = []

    for annotation in annotations:
        name = annotation.function_name
        arity = arities.get(name, annotation.arity)
        if arity is None:
            unknown.append(name)
            continue
        if any(e.target.index > arity for e in annotation.entries):
            raise EmitError(f"{name}: annotation slot exceeds arity {arity}")
        document[cooddy_key(name)] = _positional_lists(annotation, arity)

    if unknown:
        raise EmitError(f"Unknown arity for annotated functions: {', '.join(sorted(unknown))}")

    logger.info(f"[EMIT] Cooddy document with {len(document)} functions")
    return (json.dumps(document, indent=2, sort_keys=True) + "\n").encode("utf-8")


def parse_cooddy(data: bytes | str, provenance: Provenance = Provenance.MANUAL) -> AnnotationSet:
    """
    Read a Cooddy annotation document back into an AnnotationSet.

    Raises:
        EmitError: the document is not a Cooddy annotation object
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        document: Any = json.loads(text)
    except json.JSONDecodeError as e:
        raise EmitError(f"Invalid Cooddy JSON: {e}") from e
    if not isinstance(document, dict):
        raise EmitError("Cooddy document must be a JSON object")

    result = AnnotationSet()
    for key, slots in document.items():
        match = COODDY_KEY_RE.match(key)
        if not match or not isinstance(slots, list) or not slots:
            raise EmitError(f"Invalid Cooddy entry: {key!r}")
        name = match.group(1)
        try:
            entries = [
                AnnotationEntry(AnnotationTarget(index), AnnotationKind.parse(text))
                for index, values in enumerate(slots)
                for text in values
            ]
            result.add(FunctionAnnotation(
                function_id=name,
                function_name=name,
                entries=tuple(entries),
                provenance=provenance,
                arity=len(slots) - 1,
            ))
        except (AnnotationError, TypeError) as e:
            raise EmitError(f"Invalid Cooddy entry {key!r}: {e}") from e
    return result
