"""
Intraprocedural leak checker driven by annotations.

An allocation is ``v = callee(...)`` where the callee returns fresh memory
(Return AllocSource in the annotation set, or a builtin allocator). After
the allocation, ``v`` (or an alias ``w = v``) is released when it is

- passed to a builtin deallocator or at a FreeSink position,
- returned,
- stored into a field, array element, dereferenced pointer or global,
- passed to a function defined outside the analyzed corpus.

Calls to corpus functions are summarized only by their annotations.
Releases reached on every path after the allocation silence it; releases
only inside some branches or loops give MayNotBeFreed; none gives
NeverFreed. Releases in a branch that excludes the allocation's own branch
are ignored.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import AbstractSet, Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..annotate import AnnotationSet
from ..ingest import FunctionRecord
from ..ingest.c_tokenizer import (
    C_TYPE_KEYWORDS,
    NON_CALL_WORDS,
    STORAGE_SPECIFIERS,
    Token,
    find_matching,
    split_top_level,
)
from .builtins import BuiltinTable
from .statements import Path, Statement, StatementTree, parse_body

logger = logging.getLogger(__name__)

DECLARATION_STARTERS = C_TYPE_KEYWORDS | STORAGE_SPECIFIERS | {"typedef"}


class LeakReason(str, Enum):
    NEVER_FREED = "NeverFreed"
    MAY_NOT_BE_FREED = "MayNotBeFreed"


@dataclass(frozen=True, order=True)
class LeakWarning:
    file: str
    alloc_site: int
    function_id: str
    variable: str
    alloc_callee: str
    reason: LeakReason

    def to_dict(self) -> Dict[str, Any]:
        return {
            "function_id": self.function_id,
            "file": self.file,
            "variable": self.variable,
            "alloc_site": self.alloc_site,
            "alloc_callee": self.alloc_callee,
            "reason": self.reason.value,
        }

    def __str__(self) -> str:
        return (
            f"{self.file}:{self.alloc_site}: {self.reason.value}: memory allocated by "
            f"{self.alloc_callee}() into '{self.variable}' ({self.function_id})"
        )


@dataclass
class CheckReport:
    warnings: List[LeakWarning] = field(default_factory=list)
    counts: Dict[str, int] = field(default_factory=dict)
    annotation_identity: str = "none"

    @property
    def total(self) -> int:
        return len(self.warnings)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "annotations": self.annotation_identity,
            "total": self.total,
            "counts": dict(sorted(self.counts.items())),
            "warnings": [w.to_dict() for w in self.warnings],
        }

    def to_text(self) -> str:
        lines = [str(w) for w in self.warnings]
        lines.append(f"{self.total} warning(s) [annotations: {self.annotation_identity}]")
        return "\n".join(lines) + "\n"


def annotation_identity(annotations: Optional[AnnotationSet]) -> str:
    """Short digest of the annotation entries, or "none"."""
    if annotations is None or not len(annotations):
        return "none"
    entries = "|".join(
        f"{a.function_name}:" + ",".join(f"{e.target}={e.kind}" for e in a.entries)
        for a in annotations
    )
    return f"{len(annotations)}fn-{hashlib.sha256(entries.encode('utf-8')).hexdigest()[:12]}"


# ---------------------------------------------------------------------------
# token helpers
# ---------------------------------------------------------------------------

def _strip_semicolon(tokens: Sequence[Token]) -> List[Token]:
    tokens = list(tokens)
    return tokens[:-1] if tokens and tokens[-1].text == ";" else tokens


def _mentions(tokens: Sequence[Token], names: AbstractSet[str]) -> bool:
    """True if a name is used as a pointer value (not dereferenced, indexed or field-accessed)."""
    for k, tok in enumerate(tokens):
        if tok.kind != "ident" or tok.text not in names:
            continue
        prev = tokens[k - 1].text if k > 0 else ""
        nxt = tokens[k + 1].text if k + 1 < len(tokens) else ""
        if nxt in ("->", ".", "[") or prev in ("*", "->", "."):
            continue
        return True
    return False


def _is_cast(group: Sequence[Token]) -> bool:
    return bool(group) and all(t.kind == "ident" or t.text == "*" for t in group)


def _direct_value(tokens: Sequence[Token]) -> Optional[str]:
    """The identifier an expression is, after removing casts and parentheses."""
    tokens = list(tokens)
    while tokens and tokens[0].text == "(":
        close = find_matching(tokens, 0)
        if close is None:
            return None
        if close == len(tokens) - 1:
            tokens = tokens[1:-1]
        elif _is_cast(tokens[1:close]):
            tokens = tokens[close + 1:]
        else:
            return None
    if len(tokens) == 1 and tokens[0].kind == "ident":
        return tokens[0].text
    return None


def _calls(tokens: Sequence[Token]) -> List[Tuple[str, List[List[Token]]]]:
    found = []
    for k in range(len(tokens) - 1):
        tok = tokens[k]
        if tok.kind != "ident" or tokens[k + 1].text != "(" or tok.text in NON_CALL_WORDS:
            continue
        if k > 0 and tokens[k - 1].text in ("->", "."):
            continue
        close = find_matching(tokens, k + 1)
        if close is None:
            continue
        found.append((tok.text, split_top_level(tokens[k + 2:close])))
    return found


def _is_declaration(tokens: Sequence[Token]) -> bool:
    if not tokens or tokens[0].text == "return":
        return False
    if tokens[0].text in DECLARATION_STARTERS:
        return True
    if tokens[0].kind != "ident" or tokens[0].text in NON_CALL_WORDS:
        return False
    k = 1
    while k < len(tokens) and tokens[k].text == "*":
        k += 1
    return (
        k + 1 < len(tokens)
        and tokens[k].kind == "ident"
        and tokens[k + 1].text in ("=", ";", ",", "[")
    )


def _declarators(tokens: Sequence[Token]) -> List[Tuple[str, List[Token]]]:
    """(declared name, initializer tokens) for each declarator of a declaration."""
    result = []
    for part in split_top_level(_strip_semicolon(tokens)):
        eq = next((k for k, t in enumerate(part) if t.text == "="), len(part))
        names = [t.text for t in part[:eq] if t.kind == "ident" and t.text not in DECLARATION_STARTERS]
        if names:
            result.append((names[-1], part[eq + 1:]))
    return result


def _top_level_assignment(tokens: Sequence[Token]) -> Optional[Tuple[List[Token], List[Token]]]:
    tokens = _strip_semicolon(tokens)
    depth = 0
    for k, tok in enumerate(tokens):
        if tok.text in ("(", "[", "{"):
            depth += 1
        elif tok.text in (")", "]", "}"):
            depth -= 1
        elif tok.text == "=" and depth == 0:
            return tokens[:k], tokens[k + 1:]
    return None


# ---------------------------------------------------------------------------
# function analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Allocation:
    statement: Statement
    variable: str
    callee: str
    line: int


class _FunctionChecker:
    def __init__(
        self,
        function: FunctionRecord,
        annotations: AnnotationSet,
        builtins: BuiltinTable,
        known_functions: Optional[AbstractSet[str]],
    ):
        self.function = function
        self.annotations = annotations
        self.builtins = builtins
        self.known_functions = known_functions
        self.tree: StatementTree = parse_body(function)
        self.declarations = {s.index for s in self.tree.statements if _is_declaration(s.tokens)}
        self.locals: Set[str] = {p.name for p in function.params if p.name}
        for statement in self.tree.statements:
            if statement.index in self.declarations:
                self.locals.update(name for name, _ in _declarators(statement.tokens))

    def _is_allocator(self, name: str) -> bool:
        return self.annotations.has_return_alloc(name) or name in self.builtins.allocators

    def allocations(self) -> List[_Allocation]:
        found = []
        for statement in self.tree.statements:
            tokens = statement.tokens
            is_decl = statement.index in self.declarations
            for k in range(len(tokens) - 2):
                var = tokens[k]
                if var.kind != "ident" or tokens[k + 1].text != "=" or var.text not in self.locals:
                    continue
                prev = tokens[k - 1].text if k > 0 else ""
                if prev in ("->", ".") or (prev == "*" and not is_decl):
                    continue
                j = k + 2
                while j < len(tokens) and tokens[j].text == "(":
                    close = find_matching(tokens, j)
                    if close is None or not _is_cast(tokens[j + 1:close]):
                        break
                    j = close + 1
                if j + 1 < len(tokens) and tokens[j].kind == "ident" and tokens[j + 1].text == "(":
                    if self._is_allocator(tokens[j].text):
                        found.append(_Allocation(statement, var.text, tokens[j].text, var.line))
        return found

    def _releases(self, statement: Statement, tracked: Set[str]) -> bool:
        tokens = statement.tokens
        if tokens and tokens[0].text == "return" and _mentions(tokens[1:], tracked):
            return True

        for name, args in _calls(tokens):
            sinks = self.annotations.free_sink_positions(name)
            external = self.known_functions is None or name not in self.known_functions
            for position, arg in enumerate(args, start=1):
                if name in self.builtins.deallocators:
                    if position == 1 and _direct_value(arg) in tracked:
                        return True
                    continue
                if position in sinks and _direct_value(arg) in tracked:
                    return True
                if external and _mentions(arg, tracked):
                    return True

        for lhs, rhs in self._assignments(statement):
            if not _mentions(rhs, tracked):
                continue
            target = _direct_value(lhs)
            if target is None or target not in self.locals:
                return True
        return False

    def _assignments(self, statement: Statement) -> List[Tuple[List[Token], List[Token]]]:
        if statement.index in self.declarations:
            return [
                ([Token("ident", name, 0, statement.line)], init)
                for name, init in _declarators(statement.tokens)
                if init
            ]
        assignment = _top_level_assignment(statement.tokens)
        return [assignment] if assignment else []

    def _aliases(self, statement: Statement, tracked: Set[str]) -> Set[str]:
        found = set()
        for lhs, rhs in self._assignments(statement):
            target = _direct_value(lhs)
            if target in self.locals and _direct_value(rhs) in tracked:
                found.add(target)
        return found

    def verdict(self, allocation: _Allocation) -> Optional[LeakReason]:
        tracked = {allocation.variable}
        release_paths: List[Path] = []
        for statement in self.tree.statements[allocation.statement.index + 1:]:
            if self._releases(statement, tracked):
                release_paths.append(statement.path)
            tracked |= self._aliases(statement, tracked)
        return classify_releases(allocation.statement.path, release_paths, self.tree)

    def check(self) -> List[LeakWarning]:
        warnings = []
        for allocation in self.allocations():
            reason = self.verdict(allocation)
            if reason is not None:
                warnings.append(LeakWarning(
                    file=self.function.file,
                    alloc_site=allocation.line,
                    function_id=self.function.id,
                    variable=allocation.variable,
                    alloc_callee=allocation.callee,
                    reason=reason,
                ))
        return sorted(warnings)


def _covered(suffixes: List[Path], tree: StatementTree) -> bool:
    """True if every path through the region reaches one of the releases."""
    if any(not s for s in suffixes):
        return True
    for construct_id in sorted({s[0][0] for s in suffixes}):
        construct = tree.constructs.get(construct_id)
        if construct is None or construct.kind != "if" or not construct.has_else:
            continue
        if all(
            _covered([s[1:] for s in suffixes if s[0] == (construct_id, arm)], tree)
            for arm in range(construct.arms)
        ):
            return True
    return False


def classify_releases(alloc_path: Path, release_paths: Iterable[Path], tree: StatementTree) -> Optional[LeakReason]:
    """
    Decide the leak verdict from the construct paths of the allocation and
    of the later statements releasing it. None means no warning.
    """
    by_level: Dict[int, List[Path]] = {}
    reachable = False
    for path in release_paths:
        k = 0
        while k < len(path) and k < len(alloc_path) and path[k] == alloc_path[k]:
            k += 1
        if k < len(path) and k < len(alloc_path) and path[k][0] == alloc_path[k][0]:
            continue  # other arm of a branch the allocation is in
        reachable = True
        by_level.setdefault(k, []).append(path[k:])

    if any(_covered(suffixes, tree) for suffixes in by_level.values()):
        return None
    return LeakReason.MAY_NOT_BE_FREED if reachable else LeakReason.NEVER_FREED


def check_function(
    function: FunctionRecord,
    annotations: AnnotationSet | None,
    builtins: BuiltinTable,
    known_functions: Optional[AbstractSet[str]] = None,
) -> List[LeakWarning]:
    """
    Leak warnings for one function.

    Args:
        function: Function with a body
        annotations: Active annotation set (None for no annotations)
        builtins: Builtin allocators/deallocators
        known_functions: Names defined in the analyzed corpus; calls to
            them are not escapes. None treats every call as external.
    """
    return _FunctionChecker(function, annotations or AnnotationSet(), builtins, known_functions).check()


def check_corpus(
    functions: Sequence[FunctionRecord],
    annotations: AnnotationSet | None,
    builtins: BuiltinTable,
    known_functions: Optional[AbstractSet[str]] = None,
    max_workers: int = 4,
) -> CheckReport:
    """Check every function; calls to corpus functions are summarized by annotations."""
    known = frozenset(f.name for f in functions) if known_functions is None else frozenset(known_functions)
    annotations = annotations or AnnotationSet()

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        per_function = list(pool.map(lambda f: check_function(f, annotations, builtins, known), functions))

    report = CheckReport(annotation_identity=annotation_identity(annotations))
    for function, warnings in zip(functions, per_function):
        report.warnings.extend(warnings)
        if warnings:
            report.counts[function.id] = len(warnings)
    report.warnings.sort()
    logger.info(f"[CHECK] {report.total} warnings in {len(report.counts)} of {len(functions)} functions")
    return report
