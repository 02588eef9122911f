"""
Lightweight C lexer.

No preprocessing is done: comments, string/char literal contents and
preprocessor directive lines are blanked out (newlines kept, so offsets and
line numbers stay valid) and the remaining text is split into tokens.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence

TOKEN_RE = re.compile(
    r"""
    (?P<ident>[A-Za-z_]\w*)
    |(?P<number>\.?\d[\w.]*)
    |(?P<string>"[^"\n]*"|'[^'\n]*')
    |(?P<punct>->|\+\+|--|<<=|>>=|<<|>>|<=|>=|==|!=|&&|\|\||\+=|-=|\*=|/=|%=|&=|\|=|\^=|\.\.\.|\#\#|\S)
    """,
    re.VERBOSE,
)

C_TYPE_KEYWORDS = frozenset({
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned",
    "_Bool", "bool", "const", "volatile", "restrict", "struct", "union", "enum",
})

STORAGE_SPECIFIERS = frozenset({
    "static", "inline", "extern", "__inline", "__inline__", "__forceinline", "register",
})

# Identifiers that look like calls when followed by "(" but are not.
NON_CALL_WORDS = frozenset({
    "if", "for", "while", "switch", "return", "sizeof", "do", "else", "case", "goto",
    "_Alignof", "alignof", "_Generic", "defined", "typeof", "__typeof__",
    "__attribute__", "__asm__", "asm", "_Static_assert", "offsetof",
})

ATTRIBUTE_WORDS = frozenset({"__attribute__", "__attribute", "__declspec"})


@dataclass(frozen=True)
class Token:
    """A lexical token with its position in the source text."""
    kind: str
    text: str
    offset: int
    line: int

    @property
    def end(self) -> int:
        return self.offset + len(self.text)


def mask_source(text: str) -> str:
    """
    Blank out comments, literal contents and preprocessor lines.

    Literal delimiters are kept (``"  "``) so argument lists keep their shape.
    The result has exactly the same length and line structure as ``text``.
    """
    out: List[str] = []
    n = len(text)
    i = 0
    state = "code"
    directive = False
    line_start = True

    while i < n:
        ch = text[i]
        nxt = text[i + 1] if i + 1 < n else ""

        if ch == "\n":
            out.append("\n")
            # a literal never spans an unescaped newline
            if state in ("line_comment", "string", "char"):
                state = "code"
            if directive and not _escaped_newline(text, i):
                directive = False
            line_start = True
            i += 1
            continue

        if state == "code":
            if line_start and ch == "#":
                directive = True
            if ch == "/" and nxt == "/":
                state = "line_comment"
                out.append("  ")
                i += 2
                continue
            if ch == "/" and nxt == "*":
                state = "block_comment"
                out.append("  ")
                i += 2
                continue
            if ch in ('"', "'"):
                state = "string" if ch == '"' else "char"
                out.append(" " if directive else ch)
                i += 1
                line_start = False
                continue
            if not ch.isspace():
                line_start = False
            out.append(" " if directive and not ch.isspace() else ch)
            i += 1
            continue

        if state == "block_comment":
            if ch == "*" and nxt == "/":
                state = "code"
                out.append("  ")
                i += 2
                continue
            out.append(" " if not ch.isspace() else ch)
            i += 1
            continue

        if state == "line_comment":
            out.append(" " if not ch.isspace() else ch)
            i += 1
            continue

        # string / char literal
        quote = '"' if state == "string" else "'"
        if ch == "\\" and nxt:
            out.append("  " if nxt != "\n" else " \n")
            i += 2
            continue
        if ch == quote:
            state = "code"
            out.append(" " if directive else ch)
            i += 1
            continue
        out.append(" " if not ch.isspace() else ch)
        i += 1

    return "".join(out)


def _escaped_newline(text: str, newline_pos: int) -> bool:
    j = newline_pos - 1
    if j >= 0 and text[j] == "\r":
        j -= 1
    return j >= 0 and text[j] == "\\"


def tokenize(masked: str, first_line: int = 1) -> List[Token]:
    """Split masked source into tokens annotated with 1-based line numbers."""
    newlines = [m.start() for m in re.finditer("\n", masked)]
    tokens: List[Token] = []
    for match in TOKEN_RE.finditer(masked):
        kind = match.lastgroup or "punct"
        offset = match.start()
        line = first_line + bisect.bisect_left(newlines, offset)
        tokens.append(Token(kind=kind, text=match.group(), offset=offset, line=line))
    return tokens


def tokenize_source(text: str, first_line: int = 1) -> List[Token]:
    """Mask then tokenize raw C source."""
    return tokenize(mask_source(text), first_line)


_PAIRS = {"(": ")", "[": "]", "{": "}"}
_REVERSE_PAIRS = {v: k for k, v in _PAIRS.items()}


def find_matching(tokens: Sequence[Token], index: int) -> Optional[int]:
    """Index of the bracket closing ``tokens[index]``, or None if unbalanced."""
    opener = tokens[index].text
    closer = _PAIRS[opener]
    depth = 0
    for j in range(index, len(tokens)):
        text = tokens[j].text
        if text == opener:
            depth += 1
        elif text == closer:
            depth -= 1
            if depth == 0:
                return j
    return None


def find_matching_backward(tokens: Sequence[Token], index: int) -> Optional[int]:
    """Index of the bracket opening ``tokens[index]`` (a closer), scanning left."""
    closer = tokens[index].text
    opener = _REVERSE_PAIRS[closer]
    depth = 0
    for j in range(index, -1, -1):
        text = tokens[j].text
        if text == closer:
            depth += 1
        elif text == opener:
            depth -= 1
            if depth == 0:
                return j
    return None


def split_top_level(tokens: Sequence[Token], separator: str = ",") -> List[List[Token]]:
    """Split a token run on ``separator`` occurring outside nested brackets."""
    parts: List[List[Token]] = [[]]
    depth = 0
    for tok in tokens:
        if tok.text in _PAIRS:
            depth += 1
        elif tok.text in _REVERSE_PAIRS:
            depth -= 1
        if tok.text == separator and depth == 0:
            parts.append([])
        else:
            parts[-1].append(tok)
    if len(parts) == 1 and not parts[0]:
        return []
    return parts


def format_type(tokens: Sequence[Token | str]) -> str:
    """Render type tokens canonically: ``const char *``, ``void **``, ``int []``."""
    result = ""
    for tok in tokens:
        text = tok.text if isinstance(tok, Token) else tok
        if text == "*":
            result += "*" if result.endswith("*") else " *"
        elif text in ("[", "]", "(", ")"):
            if text == "[" and result and not result.endswith(("(", "[", " ")):
                result += " "
            result += text
        elif text == ",":
            result += ", "
        else:
            if result and not result.endswith(("(", "[", " ")):
                result += " "
            result += text
    return result.strip()
