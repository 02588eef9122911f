"""
Caller -> callee graph over extracted functions.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Set, Tuple

import networkx as nx

from ..errors import UnknownFunctionError
from .c_extractor import FunctionRecord
from .c_tokenizer import NON_CALL_WORDS, Token, tokenize_source

logger = logging.getLogger(__name__)


@dataclass
class CallGraph:
    """
    Directed call graph keyed by function id.

    Successor order is the order of first call in the caller's body, which
    makes traversals deterministic.
    """
    graph: nx.DiGraph = field(default_factory=nx.DiGraph)
    unresolved_calls: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def nodes(self) -> Set[str]:
        return set(self.graph.nodes)

    @property
    def edges(self) -> Set[Tuple[str, str]]:
        return set(self.graph.edges)

    def successors(self, function_id: str) -> List[str]:
        return list(self.graph.successors(function_id))

    def __contains__(self, function_id: object) -> bool:
        return function_id in self.graph


def body_tokens(function: FunctionRecord) -> List[Token]:
    """Tokens of the function body proper (after the opening brace)."""
    tokens = tokenize_source(function.body, first_line=function.start_line)
    for k, tok in enumerate(tokens):
        if tok.text == "{":
            return tokens[k + 1:-1] if tokens and tokens[-1].text == "}" else tokens[k + 1:]
    return []


def called_names(function: FunctionRecord) -> List[str]:
    """
    Names called in a body, in order of first occurrence.

    A call is an identifier followed by ``(`` that is not a keyword and not a
    member access (``obj->fn(...)`` calls through a field, not a function).
    """
    tokens = body_tokens(function)
    seen: Dict[str, None] = {}
    for k in range(len(tokens) - 1):
        tok = tokens[k]
        if tok.kind != "ident" or tokens[k + 1].text != "(" or tok.text in NON_CALL_WORDS:
            continue
        if k > 0 and tokens[k - 1].text in ("->", "."):
            continue
        seen.setdefault(tok.text, None)
    return list(seen)


def build_call_graph(functions: Sequence[FunctionRecord]) -> CallGraph:
    """
    Build the call graph of a corpus.

    Homonyms (e.g. file-static helpers with the same name) resolve to the
    definition in the caller's own file when there is one, else to all of them.
    Calls to names with no definition are recorded in ``unresolved_calls``.
    """
    by_name: Dict[str, List[FunctionRecord]] = {}
    call_graph = CallGraph()
    for fn in functions:
        if fn.id in call_graph.graph:
            raise ValueError(f"Duplicate function id: {fn.id}")
        call_graph.graph.add_node(fn.id)
        by_name.setdefault(fn.name, []).append(fn)

    for caller in functions:
        for name in called_names(caller):
            targets = by_name.get(name)
            if not targets:
                call_graph.unresolved_calls.append((caller.id, name))
                continue
            same_file = [t for t in targets if t.file == caller.file]
            for target in same_file or targets:
                call_graph.graph.add_edge(caller.id, target.id)

    logger.info(
        f"[GRAPH] Call graph: {call_graph.graph.number_of_nodes()} functions, "
        f"{call_graph.graph.number_of_edges()} edges, {len(call_graph.unresolved_calls)} external calls"
    )
    return call_graph


def callees_of(
    graph: CallGraph,
    functions: Mapping[str, FunctionRecord],
    function_id: str,
    depth: int = 1,
) -> List[FunctionRecord]:
    """
    Breadth-first callees of a function up to ``depth`` hops.

    Args:
        graph: Call graph
        functions: Function store keyed by id
        function_id: Root function id
        depth: Maximum number of hops (0 gives an empty list)

    Returns:
        Deduplicated callee records in BFS order, root excluded
    """
    if function_id not in graph:
        raise UnknownFunctionError(f"Unknown function id: {function_id}")
    if depth < 0:
        raise ValueError("depth must be >= 0")

    visited = {function_id}
    ordered: List[str] = []
    frontier = deque([(function_id, 0)])
    while frontier:
        current, level = frontier.popleft()
        if level >= depth:
            continue
        for callee in graph.successors(current):
            if callee in visited:
                continue
            visited.add(callee)
            ordered.append(callee)
            frontier.append((callee, level + 1))
    return [functions[c] for c in ordered if c in functions]
