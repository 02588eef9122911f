"""
Command-line interface.

Subcommands: annotate, emit, score, intersect, check, pipeline, dump-corpus.
Configuration comes from ``--config memanno.yaml``; flags override it.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Set

from . import __version__
from .annotate import AnnotationEngine, AnnotationSet, heuristic_annotations
from .config import RunConfig
from .errors import AnnotationError, ConfigError, MemannoError
from .emit import emit_codeql_models, emit_cooddy
from .evaluate import intersect, load_ground_truth, score
from .ingest import (
    CallGraph,
    FunctionRecord,
    build_call_graph,
    collect_aggregate_types,
    extract_corpus,
    functions_to_json,
    scan_codebase,
)
from .leakcheck import BuiltinTable, CheckReport, check_corpus
from .llm import LLMClient, build_client

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

PIPELINE_OUTPUTS = (
    "annotations.json",
    "cooddy.json",
    "codeql_models.tsv",
    "check_baseline.json",
    "check_annotated.json",
    "summary.json",
)


class ConsoleWriter:
    """Serialized writer for user-visible results on stdout."""

    def __init__(self, as_json: bool = False):
        self.as_json = as_json
        self._lock = threading.Lock()

    def write(self, text: str) -> None:
        with self._lock:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
            sys.stdout.flush()

    def emit(self, text: str, payload: Any) -> None:
        """Print ``payload`` as JSON in --json mode, else ``text``."""
        if self.as_json:
            self.write(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
        else:
            self.write(text)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(f"{self.prog}: {message}")


@dataclass
class Corpus:
    functions: List[FunctionRecord] = field(default_factory=list)
    graph: CallGraph = field(default_factory=CallGraph)
    aggregate_types: Set[str] = field(default_factory=set)
    diagnostics: List[str] = field(default_factory=list)

    @property
    def names(self) -> Set[str]:
        return {f.name for f in self.functions}


# =============================================================================
# Argument parsing
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--json", action="store_true", help="Machine-readable output")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    common.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    common.add_argument("--corpus-root", type=Path, help="Root directory of the C sources")
    common.add_argument("--include", action="append", help="Include glob (repeatable)")
    common.add_argument("--exclude", action="append", help="Exclude glob (repeatable)")
    common.add_argument("--output-dir", type=Path, help="Directory for generated files")

    llm = _ArgumentParser(add_help=False)
    llm.add_argument("--backend", choices=["remote", "mock"], help="Completion backend")
    llm.add_argument("--mock-fixtures", type=Path, help="Mock backend fixture file")
    llm.add_argument("--model", help="Model name")
    llm.add_argument("--endpoint", help="OpenAI-compatible base URL")
    llm.add_argument("--cache-dir", type=Path, help="Completion cache directory")
    llm.add_argument("--no-cache", action="store_true", help="Disable the completion cache")
    llm.add_argument("--max-in-flight", type=int, help="Concurrent backend requests")
    llm.add_argument("--context-depth", type=int, help="Callee levels included in prompts (0 = none)")
    llm.add_argument("--post-filter", action=argparse.BooleanOptionalAction, default=None,
                     help="Verify return allocations with the post-filter query")
    llm.add_argument("--prompt-dir", type=Path, help="Directory with initial.txt/postfilter.txt")
    llm.add_argument("--annotations-out", type=Path, help="Where to write the annotation set")

    parser = _ArgumentParser(
        prog="memanno",
        description="LLM-assisted allocation/deallocation annotations for C code",
    )
    parser.add_argument("--version", action="version", version=f"memanno {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("annotate", parents=[common, llm], help="Annotate corpus functions")
    p.add_argument("--annotator", choices=["llm", "heuristic"], default="llm",
                   help="LLM pipeline or name/signature heuristic")

    p = sub.add_parser("emit", parents=[common], help="Serialize an annotation set")
    p.add_argument("--format", choices=["cooddy", "codeql"], required=True)
    p.add_argument("--in", dest="input", type=Path, help="Annotation set (default: configured path)")
    p.add_argument("--out", type=Path, help="Output file (default: stdout)")

    p = sub.add_parser("score", parents=[common], help="Precision/recall against labels")
    p.add_argument("--predicted", type=Path, help="Predicted annotation set (default: configured path)")
    p.add_argument("--ground-truth", type=Path, required=True, help="Label file")
    p.add_argument("--strict-slots", action="store_true", help="Match slots, not just kinds")

    p = sub.add_parser("intersect", parents=[common], help="Compare two annotation sets by name")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)

    p = sub.add_parser("check", parents=[common], help="Run the leak checker")
    p.add_argument("--annotations", help="Annotation set file, or 'none'")
    p.add_argument("--builtins", type=Path, help="Builtin allocator table (YAML)")

    p = sub.add_parser("pipeline", parents=[common, llm], help="annotate + emit + check with delta summary")
    p.add_argument("--builtins", type=Path, help="Builtin allocator table (YAML)")

    sub.add_parser("dump-corpus", parents=[common], help="Print extracted functions as JSON")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from --config with command-line overrides applied."""
    config = RunConfig.from_file(args.config) if args.config else RunConfig()

    overrides = {
        ("corpus", "root"): getattr(args, "corpus_root", None),
        ("corpus", "include"): getattr(args, "include", None),
        ("corpus", "exclude"): getattr(args, "exclude", None),
        ("output", "output_dir"): getattr(args, "output_dir", None),
        ("output", "annotations"): getattr(args, "annotations_out", None),
        ("output", "builtins"): getattr(args, "builtins", None),
        ("backend", "kind"): getattr(args, "backend", None),
        ("backend", "mock_fixtures"): getattr(args, "mock_fixtures", None),
        ("backend", "cache_dir"): getattr(args, "cache_dir", None),
        ("backend", "max_in_flight"): getattr(args, "max_in_flight", None),
        ("generation", "model_name"): getattr(args, "model", None),
        ("generation", "endpoint"): getattr(args, "endpoint", None),
        ("annotation", "context_depth"): getattr(args, "context_depth", None),
        ("annotation", "post_filter"): getattr(args, "post_filter", None),
        ("annotation", "prompt_dir"): getattr(args, "prompt_dir", None),
    }
    for (section, key), value in overrides.items():
        if value is not None:
            setattr(getattr(config, section), key, value)
    if getattr(args, "no_cache", False):
        config.backend.cache_dir = None
    return config


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)
    for noisy in ("httpx", "openai"):
        logging.getLogger(noisy).setLevel(max(level, logging.WARNING))


# =============================================================================
# Shared steps
# =============================================================================

def load_corpus(config: RunConfig) -> Corpus:
    index = scan_codebase(config.corpus.root, config.corpus.include, config.corpus.exclude)
    functions, diagnostics = extract_corpus(index, config.corpus.max_workers)
    return Corpus(
        functions=functions,
        graph=build_call_graph(functions),
        aggregate_types=collect_aggregate_types(index),
        diagnostics=list(diagnostics),
    )


def prepare_output_file(path: Path) -> Path:
    """Make sure ``path`` can be written; raises ConfigError otherwise."""
    if path.exists() and path.is_dir():
        raise ConfigError(f"Output path is a directory: {path}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Cannot create output directory {path.parent}: {e}") from e
    if not os.access(path.parent, os.W_OK):
        raise ConfigError(f"Output directory is not writable: {path.parent}")
    return path


def write_output(path: Path, data: bytes | str) -> None:
    payload = data.encode("utf-8") if isinstance(data, str) else data
    try:
        path.write_bytes(payload)
    except OSError as e:
        raise ConfigError(f"Cannot write {path}: {e}") from e


def run_llm_annotation(config: RunConfig, corpus: Corpus) -> tuple[AnnotationSet, LLMClient]:
    config.validate()
    client = build_client(config.backend, config.generation)
    engine = AnnotationEngine(client, config.annotation, aggregate_types=corpus.aggregate_types)
    return engine.annotate_corpus(corpus.functions, corpus.graph), client


def _load_annotations(path: Path) -> AnnotationSet:
    try:
        return AnnotationSet.load(path)
    except AnnotationError as e:
        raise ConfigError(str(e)) from e


# =============================================================================
# Subcommands
# =============================================================================

def cmd_annotate(config: RunConfig, args: argparse.Namespace, out: ConsoleWriter) -> int:
    target = prepare_output_file(config.output.annotations_path)
    if args.annotator == "llm":
        config.validate()
    corpus = load_corpus(config)

    if args.annotator == "heuristic":
        annotations = heuristic_annotations(corpus.functions, config.annotation.alloc_qualifier)
        backend_calls = 0
    else:
        annotations, client = run_llm_annotation(config, corpus)
        backend_calls = client.backend_calls

    write_output(target, annotations.to_json())
    out.emit(
        f"✅ Annotated {len(annotations)} of {len(corpus.functions)} functions -> {target}",
        {
            "annotated": len(annotations),
            "functions": len(corpus.functions),
            "path": str(target),
            "backend_calls": backend_calls,
        },
    )
    return 0


def cmd_emit(config: RunConfig, args: argparse.Namespace, out: ConsoleWriter) -> int:
    annotations = _load_annotations(args.input or config.output.annotations_path)
    if args.format == "cooddy":
        data = emit_cooddy(annotations)
    else:
        data = emit_codeql_models(annotations)
    if args.out:
        write_output(prepare_output_file(args.out), data)
        logger.info(f"[EMIT] Wrote {args.out}")
    else:
        out.write(data.decode("utf-8"))
    return 0


def cmd_score(config: RunConfig, args: argparse.Namespace, out: ConsoleWriter) -> int:
    predicted = _load_annotations(args.predicted or config.output.annotations_path)
    report = score(predicted, load_ground_truth(args.ground_truth), strict_slots=args.strict_slots)
    out.emit(report.to_text(), report.to_dict())
    return 0


def cmd_intersect(config: RunConfig, args: argparse.Namespace, out: ConsoleWriter) -> int:
    report = intersect(_load_annotations(args.a), _load_annotations(args.b))
    out.emit(report.to_text(), report.to_dict())
    return 0


def cmd_check(config: RunConfig, args: argparse.Namespace, out: ConsoleWriter) -> int:
    annotations: Optional[AnnotationSet] = None
    if args.annotations != "none":
        annotations = _load_annotations(Path(args.annotations) if args.annotations else config.output.annotations_path)
    builtins = BuiltinTable.load(config.output.builtins)
    corpus = load_corpus(config)
    report = check_corpus(corpus.functions, annotations, builtins, max_workers=config.corpus.max_workers)
    out.emit(report.to_text(), report.to_dict())
    return 0


def pipeline_summary(
    corpus: Corpus,
    annotations: AnnotationSet,
    baseline: CheckReport,
    annotated: CheckReport,
) -> Dict[str, Any]:
    before = {str(w) for w in baseline.warnings}
    after = {str(w) for w in annotated.warnings}
    return {
        "functions": len(corpus.functions),
        "annotated_functions": len(annotations),
        "warnings_without_annotations": baseline.total,
        "warnings_with_annotations": annotated.total,
        "delta": annotated.total - baseline.total,
        "new_warnings": sorted(after - before),
        "resolved_warnings": sorted(before - after),
    }


def _summary_text(summary: Dict[str, Any]) -> str:
    lines = [
        "=" * 60,
        "  memanno pipeline summary",
        "=" * 60,
        f"  functions analyzed:          {summary['functions']}",
        f"  annotated functions:         {summary['annotated_functions']}",
        f"  warnings without annotations: {summary['warnings_without_annotations']}",
        f"  warnings with annotations:    {summary['warnings_with_annotations']}",
        f"  delta:                        {summary['delta']:+d}",
    ]
    for title, key in (("new", "new_warnings"), ("resolved", "resolved_warnings")):
        for warning in summary[key]:
            lines.append(f"  [{title}] {warning}")
    return "\n".join(lines) + "\n"


def cmd_pipeline(config: RunConfig, args: argparse.Namespace, out: ConsoleWriter) -> int:
    output_dir = config.output.output_dir
    targets = {name: prepare_output_file(output_dir / name) for name in PIPELINE_OUTPUTS}
    targets["annotations.json"] = prepare_output_file(config.output.annotations_path)
    config.validate()
    builtins = BuiltinTable.load(config.output.builtins)

    logger.info("[PIPELINE] [STEP 1/4] Ingesting corpus")
    corpus = load_corpus(config)

    logger.info("[PIPELINE] [STEP 2/4] Annotating")
    annotations, client = run_llm_annotation(config, corpus)
    write_output(targets["annotations.json"], annotations.to_json())

    logger.info("[PIPELINE] [STEP 3/4] Emitting analyzer models")
    write_output(targets["cooddy.json"], emit_cooddy(annotations))
    write_output(targets["codeql_models.tsv"], emit_codeql_models(annotations))

    logger.info("[PIPELINE] [STEP 4/4] Checking with and without annotations")
    workers = config.corpus.max_workers
    baseline = check_corpus(corpus.functions, None, builtins, max_workers=workers)
    annotated = check_corpus(corpus.functions, annotations, builtins, max_workers=workers)
    write_output(targets["check_baseline.json"], _to_json(baseline.to_dict()))
    write_output(targets["check_annotated.json"], _to_json(annotated.to_dict()))

    summary = pipeline_summary(corpus, annotations, baseline, annotated)
    write_output(targets["summary.json"], _to_json(summary))
    logger.info(f"[PIPELINE] ✅ Done ({client.backend_calls} backend calls, {client.cache_hits} cache hits)")
    out.emit(_summary_text(summary), summary)
    return 0


def cmd_dump_corpus(config: RunConfig, args: argparse.Namespace, out: ConsoleWriter) -> int:
    corpus = load_corpus(config)
    out.write(functions_to_json(corpus.functions))
    return 0


def _to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


COMMANDS = {
    "annotate": cmd_annotate,
    "emit": cmd_emit,
    "score": cmd_score,
    "intersect": cmd_intersect,
    "check": cmd_check,
    "pipeline": cmd_pipeline,
    "dump-corpus": cmd_dump_corpus,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.verbose, args.quiet)
        config = load_config(args)
        return COMMANDS[args.command](config, args, ConsoleWriter(as_json=args.json))
    except MemannoError as e:
        logger.debug("Fatal error", exc_info=True)
        sys.stderr.write(f"❌ Error: {e}\n")
        return e.exit_code
    except KeyboardInterrupt:
        sys.stderr.write("\nInterrupted\n")
        return 130


if __name__ == "__main__":
    sys.exit(main())
