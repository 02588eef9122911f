"""
C function extractor.

Recognizes ``<type> name(params) {`` at brace depth 0 of the masked source
and captures the complete definition text. Prototypes, struct bodies,
initializers and macro definitions produce no records.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .c_tokenizer import (
    ATTRIBUTE_WORDS,
    C_TYPE_KEYWORDS,
    NON_CALL_WORDS,
    STORAGE_SPECIFIERS,
    Token,
    find_matching,
    find_matching_backward,
    format_type,
    mask_source,
    split_top_level,
    tokenize,
)
from .corpus_scanner import CorpusFile, CorpusIndex

logger = logging.getLogger(__name__)

_MACRO_NAME = re.compile(r"^[A-Z][A-Z0-9_]*$")


@dataclass(frozen=True)
class Parameter:
    """A declared function parameter."""
    name: str
    type_text: str


@dataclass(frozen=True)
class FunctionRecord:
    """One extracted C function definition."""
    id: str
    file: str
    name: str
    params: Tuple[Parameter, ...]
    return_type_text: str
    body: str
    start_line: int
    end_line: int
    is_definition: bool = True

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def param_names(self) -> List[str]:
        return [p.name for p in self.params]

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["params"] = [{"name": p.name, "type_text": p.type_text} for p in self.params]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FunctionRecord":
        return cls(
            id=data["id"],
            file=data["file"],
            name=data["name"],
            params=tuple(Parameter(p["name"], p["type_text"]) for p in data.get("params", [])),
            return_type_text=data["return_type_text"],
            body=data["body"],
            start_line=data["start_line"],
            end_line=data["end_line"],
            is_definition=data.get("is_definition", True),
        )


@dataclass
class FileExtraction:
    """Extraction result for a single file."""
    file: str
    functions: List[FunctionRecord] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)


def make_function_id(file: str, name: str, start_line: int) -> str:
    return f"{file}:{name}:{start_line}"


def extract_from_source(text: str, file: str = "<memory>") -> FileExtraction:
    """
    Extract all function definitions from one translation unit's text.

    Args:
        text: Raw C source
        file: Path used for ids and diagnostics

    Returns:
        FileExtraction with records in source order
    """
    result = FileExtraction(file=file)
    tokens = tokenize(mask_source(text))

    boundary = -1  # index of the last token closing a top-level declaration
    transparent = 0  # open `extern "C" {` blocks
    i = 0
    n = len(tokens)

    while i < n:
        text_i = tokens[i].text

        if text_i == ";":
            boundary = i
            i += 1
            continue

        if text_i == "}":
            if transparent > 0:
                transparent -= 1
            else:
                result.diagnostics.append(
                    f"{file}:{tokens[i].line}: unmatched '}}' at top level"
                )
            boundary = i
            i += 1
            continue

        if text_i != "{":
            i += 1
            continue

        header = tokens[boundary + 1:i]
        if _is_linkage_block(header):
            transparent += 1
            boundary = i
            i += 1
            continue

        close = find_matching(tokens, i)
        if close is None:
            result.diagnostics.append(
                f"{file}:{tokens[i].line}: unbalanced braces, extraction stopped"
            )
            break

        record = _build_record(text, file, header, tokens[close])
        if record is not None:
            result.functions.append(record)
        elif _is_function_header(header):
            result.diagnostics.append(
                f"{file}:{tokens[i].line}: unrecognized function header, body skipped"
            )
        boundary = close
        i = close + 1

    for message in result.diagnostics:
        logger.warning(f"[INGEST] ⚠️ {message}")
    return result


def _is_linkage_block(header: Sequence[Token]) -> bool:
    return len(header) == 2 and header[0].text == "extern" and header[1].kind == "string"


def _strip_attributes(header: Sequence[Token]) -> List[Token]:
    """Drop ``__attribute__((...))`` / ``__declspec(...)`` wherever they appear."""
    result: List[Token] = []
    k = 0
    while k < len(header):
        if header[k].text in ATTRIBUTE_WORDS and k + 1 < len(header) and header[k + 1].text == "(":
            close = find_matching(header, k + 1)
            if close is not None:
                k = close + 1
                continue
        result.append(header[k])
        k += 1
    return result


def _drop_leading_macro_lines(header: List[Token]) -> List[Token]:
    """
    Remove ``MACRO(args)`` invocations left in front of a definition, e.g.
    ``LIST_HEAD(things)`` on the line above. An export macro wrapping the
    return type (``EXPORT(void *) name(...)``) is kept.
    """
    while (
        len(header) > 1
        and header[0].kind == "ident"
        and header[0].text not in ATTRIBUTE_WORDS
        and header[0].text not in C_TYPE_KEYWORDS
        and header[1].text == "("
    ):
        close = find_matching(header, 1)
        if close is None:
            break
        rest = _strip_attributes(header[close + 1:])
        if not rest or rest[-1].text != ")":
            break
        open_idx = find_matching_backward(rest, len(rest) - 1)
        if open_idx is None or open_idx < 2:
            break
        header = header[close + 1:]
    return header


def _is_function_header(header: Sequence[Token]) -> bool:
    stripped = _strip_attributes(header)
    return bool(stripped) and stripped[-1].text == ")"


def _build_record(
    text: str,
    file: str,
    header: Sequence[Token],
    close: Token,
) -> Optional[FunctionRecord]:
    header = _drop_leading_macro_lines(list(header))
    if not header:
        return None
    start_tok = header[0]
    header = _strip_attributes(header)
    if len(header) < 3 or header[-1].text != ")":
        return None
    parts = _split_header(header)
    if parts is None:
        return None
    name_tok, param_tokens, return_type = parts

    return FunctionRecord(
        id=make_function_id(file, name_tok.text, start_tok.line),
        file=file,
        name=name_tok.text,
        params=tuple(_parse_params(param_tokens)),
        return_type_text=return_type,
        body=text[start_tok.offset:close.end],
        start_line=start_tok.line,
        end_line=close.line,
    )


def _split_header(header: List[Token]) -> Optional[Tuple[Token, List[Token], str]]:
    """(name token, parameter tokens, return type text) of ``<type> name(params)``."""
    open_idx = find_matching_backward(header, len(header) - 1)
    if open_idx is None or open_idx == 0:
        return None
    name_tok = header[open_idx - 1]
    if name_tok.text == ")":
        return _split_function_pointer_header(header, open_idx)
    if name_tok.kind != "ident" or name_tok.text in NON_CALL_WORDS:
        return None

    type_tokens = header[:open_idx - 1]
    if any(t.text in ("=", ",", ";") for t in type_tokens):
        return None
    return_type = _return_type_text(type_tokens)
    if return_type is None:
        return None
    return name_tok, header[open_idx + 1:-1], return_type


def _split_function_pointer_header(
    header: List[Token],
    signature_open: int,
) -> Optional[Tuple[Token, List[Token], str]]:
    """``int (*name(params))(int)``: a function returning a function pointer."""
    group_open = find_matching_backward(header, signature_open - 1)
    if group_open is None:
        return None
    inner = header[group_open + 1:signature_open - 1]
    if len(inner) < 4 or inner[0].text != "*" or inner[-1].text != ")":
        return None
    params_open = find_matching_backward(inner, len(inner) - 1)
    if params_open is None or params_open < 2:
        return None
    name_tok = inner[params_open - 1]
    stars = inner[:params_open - 1]
    if name_tok.kind != "ident" or any(t.text != "*" for t in stars):
        return None

    base = _return_type_text(header[:group_open])
    if base is None:
        return None
    signature = ", ".join(format_type(p) for p in split_top_level(header[signature_open + 1:-1]))
    pointer = "".join(t.text for t in stars)
    return name_tok, inner[params_open + 1:-1], f"{base} ({pointer})({signature})"


def _return_type_text(type_tokens: Sequence[Token]) -> Optional[str]:
    tokens = [t for t in type_tokens if t.text not in STORAGE_SPECIFIERS]

    # EXPORT_MACRO(type) name(...)
    if tokens and "(" in (t.text for t in tokens):
        first_paren = next(k for k, t in enumerate(tokens) if t.text == "(")
        if first_paren == 0 or tokens[-1].text != ")":
            return None
        inner_close = find_matching(tokens, first_paren)
        if inner_close != len(tokens) - 1:
            return None
        tokens = tokens[first_paren + 1:inner_close]

    # calling-convention macros between the type and the name
    while len(tokens) >= 2 and _MACRO_NAME.match(tokens[-1].text) and tokens[-2].text == "*":
        tokens = tokens[:-1]
    while (
        len(tokens) >= 2
        and _MACRO_NAME.match(tokens[-1].text)
        and tokens[-2].kind == "ident"
        and tokens[-2].text not in ("struct", "union", "enum")
    ):
        tokens = tokens[:-1]

    return format_type(tokens) or "int"


def _parse_params(tokens: Sequence[Token]) -> List[Parameter]:
    parts = split_top_level(tokens)
    if len(parts) == 1 and [t.text for t in parts[0]] in ([], ["void"]):
        return []
    params: List[Parameter] = []
    for part in parts:
        param = _parse_param(part)
        if param is not None:
            params.append(param)
    return params


def _parse_param(tokens: List[Token]) -> Optional[Parameter]:
    texts = [t.text for t in tokens]
    if not texts or texts == ["..."]:
        return None
    tokens = [t for t in tokens if t.text != "register"]

    # function pointer: type (*name)(args)
    for k in range(len(tokens) - 3):
        if (
            tokens[k].text == "("
            and tokens[k + 1].text == "*"
            and tokens[k + 2].kind == "ident"
            and tokens[k + 3].text == ")"
        ):
            name = tokens[k + 2].text
            rest = tokens[:k + 2] + tokens[k + 3:]
            return Parameter(name=name, type_text=format_type(rest))

    suffix: List[Token] = []
    while tokens and tokens[-1].text == "]":
        open_idx = find_matching_backward(tokens, len(tokens) - 1)
        if open_idx is None:
            break
        suffix = tokens[open_idx:] + suffix
        tokens = tokens[:open_idx]

    if len(tokens) >= 2 and tokens[-1].kind == "ident" and tokens[-1].text not in NON_CALL_WORDS:
        return Parameter(name=tokens[-1].text, type_text=format_type(tokens[:-1] + suffix))
    return Parameter(name="", type_text=format_type(tokens + suffix))


def extract_functions(index: CorpusIndex, max_workers: int = 4) -> List[FunctionRecord]:
    """
    Extract function records from every file of a corpus.

    Files are processed concurrently; the result is sorted by (file, start_line).
    """
    return extract_corpus(index, max_workers=max_workers)[0]


def extract_corpus(
    index: CorpusIndex,
    max_workers: int = 4,
) -> Tuple[List[FunctionRecord], List[str]]:
    """Like extract_functions, also returning per-file diagnostics."""

    def work(file: CorpusFile) -> FileExtraction:
        try:
            source = index.read_text(file)
        except OSError as e:
            return FileExtraction(file=file.path, diagnostics=[f"{file.path}: unreadable: {e}"])
        return extract_from_source(source, file.path)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        extractions = list(pool.map(work, index.files))

    functions = [fn for ex in extractions for fn in ex.functions]
    functions.sort(key=lambda f: (f.file, f.start_line))
    diagnostics = [d for ex in extractions for d in ex.diagnostics]
    logger.info(f"[INGEST] Extracted {len(functions)} function definitions from {len(index.files)} files")
    return functions, diagnostics


def collect_aggregate_types(index: CorpusIndex) -> Set[str]:
    """Names introduced by ``typedef struct ...`` / ``typedef union ...``."""
    names: Set[str] = set()
    for file in index.files:
        try:
            names |= aggregate_types_in_source(index.read_text(file))
        except OSError:
            continue
    return names


def aggregate_types_in_source(text: str) -> Set[str]:
    tokens = tokenize(mask_source(text))
    names: Set[str] = set()
    i = 0
    while i < len(tokens):
        if tokens[i].text != "typedef" or i + 1 >= len(tokens) or tokens[i + 1].text not in ("struct", "union"):
            i += 1
            continue
        j = i + 1
        while j < len(tokens) and tokens[j].text != ";":
            if tokens[j].text == "{":
                close = find_matching(tokens, j)
                if close is None:
                    return names
                j = close
            j += 1
        decl = tokens[i:j]
        if len(decl) >= 2 and decl[-1].kind == "ident" and decl[-2].text != "*":
            names.add(decl[-1].text)
        i = j + 1
    return names


def functions_to_json(functions: Iterable[FunctionRecord]) -> str:
    """Corpus dump: a JSON array of function records."""
    return json.dumps([f.to_dict() for f in functions], indent=2, ensure_ascii=False) + "\n"
