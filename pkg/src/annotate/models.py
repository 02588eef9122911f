"""
Annotation data model.

A FunctionAnnotation labels positional slots of one function (the return
value or a 1-based parameter) with AllocSource or FreeSink. An AnnotationSet
maps function names to their non-empty annotations and is also the schema of
hand-written label files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Set, Tuple

from ..errors import AnnotationError

RETURN_SLOT = "return"


class AnnotationTag(str, Enum):
    ALLOC_SOURCE = "AllocSource"
    FREE_SINK = "FreeSink"


DEFAULT_QUALIFIERS = {AnnotationTag.ALLOC_SOURCE: 1, AnnotationTag.FREE_SINK: 3}


class Provenance(str, Enum):
    LLM = "LLM"
    LLM_POST_FILTERED = "LLMPostFiltered"
    NAME_HEURISTIC = "NameHeuristic"
    MANUAL = "Manual"


@dataclass(frozen=True, order=True)
class AnnotationKind:
    """Tag plus the integer qualifier printed after ``::``."""
    tag: AnnotationTag
    qualifier: int = 1

    def __post_init__(self) -> None:
        if self.qualifier < 1:
            raise AnnotationError(f"Qualifier must be >= 1, got {self.qualifier}")

    @classmethod
    def alloc_source(cls, qualifier: int = DEFAULT_QUALIFIERS[AnnotationTag.ALLOC_SOURCE]) -> "AnnotationKind":
        return cls(AnnotationTag.ALLOC_SOURCE, qualifier)

    @classmethod
    def free_sink(cls, qualifier: int = DEFAULT_QUALIFIERS[AnnotationTag.FREE_SINK]) -> "AnnotationKind":
        return cls(AnnotationTag.FREE_SINK, qualifier)

    def __str__(self) -> str:
        return f"{self.tag.value}::{self.qualifier}"

    @classmethod
    def parse(cls, text: str) -> "AnnotationKind":
        name, sep, qualifier = text.partition("::")
        try:
            tag = AnnotationTag(name)
            return cls(tag, int(qualifier) if sep else DEFAULT_QUALIFIERS[tag])
        except ValueError as e:
            raise AnnotationError(f"Invalid annotation string: {text!r}") from e


@dataclass(frozen=True, order=True)
class AnnotationTarget:
    """Return value (index 0) or parameter ``index`` (1-based)."""
    index: int = 0

    def __post_init__(self) -> None:
        if self.index < 0:
            raise AnnotationError(f"Invalid slot index {self.index}")

    @classmethod
    def ret(cls) -> "AnnotationTarget":
        return cls(0)

    @classmethod
    def param(cls, index: int) -> "AnnotationTarget":
        if index < 1:
            raise AnnotationError(f"Parameter slots are 1-based, got {index}")
        return cls(index)

    @property
    def is_return(self) -> bool:
        return self.index == 0

    def __str__(self) -> str:
        return RETURN_SLOT if self.is_return else f"param:{self.index}"

    @classmethod
    def parse(cls, value: Any) -> "AnnotationTarget":
        if value == RETURN_SLOT:
            return cls.ret()
        if isinstance(value, int) and not isinstance(value, bool):
            return cls.param(value)
        if isinstance(value, str) and value.startswith("param:") and value[6:].isdigit():
            return cls.param(int(value[6:]))
        raise AnnotationError(f"Invalid slot: {value!r}")


@dataclass(frozen=True, order=True)
class AnnotationEntry:
    target: AnnotationTarget
    kind: AnnotationKind


@dataclass(frozen=True)
class FunctionAnnotation:
    """
    Annotations of one function.

    At most one kind per target; in particular a target never carries both
    AllocSource and FreeSink.
    """
    function_id: str
    function_name: str
    entries: Tuple[AnnotationEntry, ...] = ()
    provenance: Provenance = Provenance.LLM
    arity: Optional[int] = None

    def __post_init__(self) -> None:
        targets = [e.target for e in self.entries]
        if len(targets) != len(set(targets)):
            raise AnnotationError(f"{self.function_name}: more than one kind on a single target")
        if self.arity is not None:
            for target in targets:
                if target.index > self.arity:
                    raise AnnotationError(
                        f"{self.function_name}: slot {target} exceeds arity {self.arity}"
                    )
        object.__setattr__(self, "entries", tuple(sorted(self.entries)))

    @property
    def is_empty(self) -> bool:
        return not self.entries

    @property
    def tags(self) -> Set[AnnotationTag]:
        return {e.kind.tag for e in self.entries}

    @property
    def has_return_alloc(self) -> bool:
        return any(e.target.is_return and e.kind.tag == AnnotationTag.ALLOC_SOURCE for e in self.entries)

    @property
    def free_sink_positions(self) -> Set[int]:
        return {e.target.index for e in self.entries if e.kind.tag == AnnotationTag.FREE_SINK and not e.target.is_return}

    def kind_at(self, target: AnnotationTarget) -> Optional[AnnotationKind]:
        for entry in self.entries:
            if entry.target == target:
                return entry.kind
        return None

    def with_entries(self, entries: Iterable[AnnotationEntry], provenance: Provenance | None = None) -> "FunctionAnnotation":
        return replace(self, entries=tuple(entries), provenance=provenance or self.provenance)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "entries": [
                {"slot": str(e.target), "kind": e.kind.tag.value, "qualifier": e.kind.qualifier}
                for e in self.entries
            ],
            "provenance": self.provenance.value,
        }
        if self.arity is not None:
            data["arity"] = self.arity
        if self.function_id and self.function_id != self.function_name:
            data["function_id"] = self.function_id
        return data

    @classmethod
    def from_dict(cls, name: str, data: Dict[str, Any], provenance: Provenance | None = None) -> "FunctionAnnotation":
        if not isinstance(data, dict) or not isinstance(data.get("entries", []), list):
            raise AnnotationError(f"{name}: annotation must be an object with an 'entries' list")
        entries = []
        for raw in data.get("entries", []):
            try:
                tag = AnnotationTag(raw["kind"])
                qualifier = int(raw.get("qualifier", DEFAULT_QUALIFIERS[tag]))
                entries.append(AnnotationEntry(AnnotationTarget.parse(raw["slot"]), AnnotationKind(tag, qualifier)))
            except (KeyError, TypeError, ValueError) as e:
                raise AnnotationError(f"{name}: invalid entry {raw!r}: {e}") from e
        try:
            prov = provenance or Provenance(data.get("provenance", Provenance.MANUAL.value))
        except ValueError as e:
            raise AnnotationError(f"{name}: invalid provenance {data.get('provenance')!r}") from e
        arity = data.get("arity")
        if arity is not None and (not isinstance(arity, int) or arity < 0):
            raise AnnotationError(f"{name}: invalid arity {arity!r}")
        return cls(
            function_id=data.get("function_id", name),
            function_name=name,
            entries=tuple(entries),
            provenance=prov,
            arity=arity,
        )


@dataclass
class AnnotationSet:
    """Function name -> non-empty FunctionAnnotation, plus run metadata."""
    functions: Dict[str, FunctionAnnotation] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add(self, annotation: FunctionAnnotation) -> bool:
        """Store a non-empty annotation; returns False for empty ones."""
        if annotation.is_empty:
            return False
        if annotation.function_name in self.functions:
            raise AnnotationError(f"Duplicate function name in annotation set: {annotation.function_name}")
        self.functions[annotation.function_name] = annotation
        return True

    def get(self, name: str) -> Optional[FunctionAnnotation]:
        return self.functions.get(name)

    def names(self) -> List[str]:
        return sorted(self.functions)

    def __contains__(self, name: object) -> bool:
        return name in self.functions

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self) -> Iterator[FunctionAnnotation]:
        return iter(self.functions[name] for name in self.names())

    def has_return_alloc(self, name: str) -> bool:
        annotation = self.functions.get(name)
        return annotation is not None and annotation.has_return_alloc

    def free_sink_positions(self, name: str) -> Set[int]:
        annotation = self.functions.get(name)
        return annotation.free_sink_positions if annotation else set()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metadata": dict(self.metadata),
            "functions": {name: self.functions[name].to_dict() for name in self.names()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8", newline="\n")

    @classmethod
    def from_dict(cls, data: Any, provenance: Provenance | None = None) -> "AnnotationSet":
        if not isinstance(data, dict) or not isinstance(data.get("functions", {}), dict):
            raise AnnotationError("Annotation set must be an object with a 'functions' mapping")
        result = cls(metadata=dict(data.get("metadata") or {}))
        for name, entry in data.get("functions", {}).items():
            result.add(FunctionAnnotation.from_dict(name, entry, provenance))
        return result

    @classmethod
    def from_json(cls, text: str, provenance: Provenance | None = None) -> "AnnotationSet":
        try:
            data = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
        except json.JSONDecodeError as e:
            raise AnnotationError(f"Invalid annotation JSON: {e}") from e
        return cls.from_dict(data, provenance)

    @classmethod
    def load(cls, path: Path | str, provenance: Provenance | None = None) -> "AnnotationSet":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise AnnotationError(f"Cannot read annotation file {path}: {e}") from e
        return cls.from_json(text, provenance)


def _reject_duplicate_keys(pairs: List[Tuple[str, Any]]) -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    for key, value in pairs:
        if key in result:
            raise AnnotationError(f"Duplicate function name in annotation set: {key}")
        result[key] = value
    return result
