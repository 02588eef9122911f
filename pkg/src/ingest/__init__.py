"""C corpus ingestion: scanning, function extraction and call graph."""

from .corpus_scanner import CorpusFile, CorpusIndex, scan_codebase
from .c_extractor import (
    FunctionRecord,
    Parameter,
    collect_aggregate_types,
    extract_corpus,
    extract_from_source,
    extract_functions,
    functions_to_json,
)
from .call_graph import CallGraph, build_call_graph, callees_of, called_names

__all__ = [
    "CorpusFile",
    "CorpusIndex",
    "scan_codebase",
    "FunctionRecord",
    "Parameter",
    "collect_aggregate_types",
    "extract_corpus",
    "extract_from_source",
    "extract_functions",
    "functions_to_json",
    "CallGraph",
    "build_call_graph",
    "callees_of",
    "called_names",
]
