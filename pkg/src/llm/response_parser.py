"""
Parsing of model answers.

Models wrap JSON in prose, code fences or reasoning traces; the answer is
taken from the last syntactically valid JSON object in the text.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional

from ..errors import ResponseParseError
from .llm_client import RawCompletion

logger = logging.getLogger(__name__)

IDENTIFIER_RE = re.compile(r"[A-Za-z_]\w*")
YES_NO_RE = re.compile(r"^\s*(yes|no|true|false)\b", re.IGNORECASE)


@dataclass(frozen=True)
class AllocationFindings:
    """Variables the model reports as holding allocated / deallocated memory."""
    allocated_variables: List[str] = field(default_factory=list)
    deallocated_variables: List[str] = field(default_factory=list)


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    UNPARSEABLE = "unparseable"


@dataclass(frozen=True)
class PostFilterVerdict:
    """Answer to "does the return value point into the argument structure?"."""
    points_into_argument: Verdict
    raw: RawCompletion


def extract_last_json_object(text: str) -> Optional[Dict[str, Any]]:
    """The last top-level JSON object embedded in ``text``, or None."""
    decoder = json.JSONDecoder()
    last: Optional[Dict[str, Any]] = None
    pos = 0
    while True:
        start = text.find("{", pos)
        if start < 0:
            return last
        try:
            obj, end = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            pos = start + 1
            continue
        if isinstance(obj, dict):
            last = obj
        pos = end


def _clean_names(value: Any) -> List[str]:
    if value is None:
        return []
    items = value if isinstance(value, list) else [value]
    names: List[str] = []
    for item in items:
        if isinstance(item, dict):
            item = item.get("name") or item.get("variable")
        if not isinstance(item, str):
            continue
        cleaned = re.sub(r"[\s*&]", "", item)
        if not IDENTIFIER_RE.fullmatch(cleaned):
            logger.debug(f"[LLM] Ignoring non-identifier variable {item!r}")
            continue
        if cleaned not in names:
            names.append(cleaned)
    return names


def parse_allocation_response(raw: RawCompletion) -> AllocationFindings:
    """
    Read ``allocated_variables`` / ``deallocated_variables`` from an answer.

    Raises:
        ResponseParseError: no JSON object in the text
    """
    obj = extract_last_json_object(raw.text)
    if obj is None:
        raise ResponseParseError("No JSON object found in completion", raw_text=raw.text)
    return AllocationFindings(
        allocated_variables=_clean_names(obj.get("allocated_variables")),
        deallocated_variables=_clean_names(obj.get("deallocated_variables")),
    )


def _walk_values(value: Any) -> Iterator[Any]:
    if isinstance(value, dict):
        for item in value.values():
            yield from _walk_values(item)
    elif isinstance(value, list):
        for item in value:
            yield from _walk_values(item)
    else:
        yield value


def parse_postfilter_response(raw: RawCompletion) -> PostFilterVerdict:
    """
    Find the first boolean-equivalent value in the answer object.

    Booleans count directly; strings count when they start with
    yes/no/true/false (case-insensitive). Nothing found -> UNPARSEABLE.
    """
    obj = extract_last_json_object(raw.text)
    if obj is not None:
        for value in _walk_values(obj):
            if isinstance(value, bool):
                return PostFilterVerdict(Verdict.YES if value else Verdict.NO, raw)
            if isinstance(value, str):
                match = YES_NO_RE.match(value)
                if match:
                    word = match.group(1).lower()
                    verdict = Verdict.YES if word in ("yes", "true") else Verdict.NO
                    return PostFilterVerdict(verdict, raw)
    return PostFilterVerdict(Verdict.UNPARSEABLE, raw)
