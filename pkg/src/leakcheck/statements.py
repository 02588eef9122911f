"""
Flattened statement view of a function body.

Each statement carries the chain of enclosing conditional constructs it sits
in, as ``(construct_id, arm)`` pairs. ``if``/``else`` chains get one arm per
branch; ``while``/``for``/``switch`` bodies (and macro loops written as
``NAME(...) { ... }``) get a single arm that is never guaranteed to run.
Conditions and loop headers belong to the enclosing level. ``do`` bodies
and plain blocks always run, so they add nothing to the chain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from ..ingest import FunctionRecord
from ..ingest.c_tokenizer import Token, find_matching
from ..ingest.call_graph import body_tokens

logger = logging.getLogger(__name__)

Path = Tuple[Tuple[int, int], ...]

LOOP_KEYWORDS = frozenset({"while", "for", "switch"})


@dataclass(frozen=True)
class Construct:
    construct_id: int
    kind: str  # "if" or "loop"
    arms: int = 1
    has_else: bool = False


@dataclass(frozen=True)
class Statement:
    index: int
    tokens: Tuple[Token, ...]
    path: Path

    @property
    def line(self) -> int:
        return self.tokens[0].line if self.tokens else 0

    @property
    def texts(self) -> List[str]:
        return [t.text for t in self.tokens]


@dataclass
class StatementTree:
    statements: List[Statement] = field(default_factory=list)
    constructs: Dict[int, Construct] = field(default_factory=dict)


class _BodyParser:
    def __init__(self, tokens: Sequence[Token]):
        self.tokens = list(tokens)
        self.tree = StatementTree()
        self._next_id = 0

    def _new_construct(self) -> int:
        self._next_id += 1
        return self._next_id

    def _emit(self, start: int, end: int, path: Path) -> None:
        if end > start:
            index = len(self.tree.statements)
            self.tree.statements.append(Statement(index, tuple(self.tokens[start:end]), path))

    def _text(self, i: int) -> str:
        return self.tokens[i].text if i < len(self.tokens) else ""

    def _closing(self, i: int, limit: int) -> int:
        """Index of the bracket closing tokens[i], clamped to the block end."""
        j = find_matching(self.tokens, i)
        return j if j is not None and j < limit else limit - 1

    def parse_block(self, i: int, end: int, path: Path) -> None:
        while i < end:
            i = self.parse_statement(i, end, path)

    def parse_statement(self, i: int, end: int, path: Path) -> int:
        if i >= end:
            return end
        text = self._text(i)

        if text == ";":
            return i + 1
        if text == "{":
            j = self._closing(i, end)
            self.parse_block(i + 1, j, path)
            return j + 1
        if text == "if" and self._text(i + 1) == "(":
            return self._parse_if(i, end, path)
        if text in LOOP_KEYWORDS and self._text(i + 1) == "(":
            j = self._closing(i + 1, end)
            self._emit(i, j + 1, path)
            if text == "while" and self._text(j + 1) == ";":
                return j + 2
            return self._parse_loop_body(j + 1, end, path)
        if text == "do":
            i = self.parse_statement(i + 1, end, path)
            if self._text(i) == "while" and self._text(i + 1) == "(":
                j = self._closing(i + 1, end)
                self._emit(i, j + 1, path)
                i = j + 1
            return i + 1 if self._text(i) == ";" else i
        if text in ("case", "default"):
            while i < end and self._text(i) != ":":
                i += 1
            return i + 1
        if text == "else":
            return i + 1
        if self.tokens[i].kind == "ident" and self._text(i + 1) == ":":
            return i + 2
        return self._parse_simple(i, end, path)

    def _parse_if(self, i: int, end: int, path: Path) -> int:
        construct = self._new_construct()
        arm = 0
        j = self._closing(i + 1, end)
        self._emit(i, j + 1, path)
        i = self.parse_statement(j + 1, end, path + ((construct, arm),))
        has_else = False
        while self._text(i) == "else" and i < end:
            arm += 1
            arm_path = path + ((construct, arm),)
            if self._text(i + 1) == "if" and self._text(i + 2) == "(":
                j = self._closing(i + 2, end)
                self._emit(i + 1, j + 1, arm_path)
                i = self.parse_statement(j + 1, end, arm_path)
            else:
                has_else = True
                i = self.parse_statement(i + 1, end, arm_path)
                break
        self.tree.constructs[construct] = Construct(construct, "if", arm + 1, has_else)
        return i

    def _parse_loop_body(self, i: int, end: int, path: Path) -> int:
        construct = self._new_construct()
        self.tree.constructs[construct] = Construct(construct, "loop")
        return self.parse_statement(i, end, path + ((construct, 0),))

    def _parse_simple(self, i: int, end: int, path: Path) -> int:
        depth = 0
        j = i
        while j < end:
            text = self.tokens[j].text
            if text in ("(", "["):
                depth += 1
            elif text in (")", "]"):
                depth -= 1
            elif text == "{":
                if depth == 0 and j > i and self.tokens[j - 1].text == ")":
                    # NAME(...) { ... } iteration macro
                    self._emit(i, j, path)
                    return self._parse_loop_body(j, end, path)
                k = self._closing(j, end)
                j = k
            elif text == ";" and depth <= 0:
                self._emit(i, j + 1, path)
                return j + 1
            j += 1
        self._emit(i, end, path)
        return end


def parse_body(function: FunctionRecord) -> StatementTree:
    """Parse the body of ``function`` into a flat, path-annotated statement list."""
    tokens = body_tokens(function)
    parser = _BodyParser(tokens)
    parser.parse_block(0, len(tokens), ())
    return parser.tree

