"""Shared fixtures for the memanno test-suite."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Dict, List

import pytest

from src.annotate import (
    AnnotationEntry,
    AnnotationKind,
    AnnotationSet,
    AnnotationTarget,
    FunctionAnnotation,
    Provenance,
)
from src.cli import Corpus, load_corpus
from src.config import BackendConfig, GenerationConfig, RunConfig
from src.ingest import FunctionRecord, extract_from_source
from src.llm import LLMClient, MockBackend

FIXTURES = Path(__file__).parent / "fixtures"
SYNTHETIC = FIXTURES / "synthetic"
LIBSOLV = FIXTURES / "libsolv"
CJSON = FIXTURES / "cjson_excerpt"
GOLDEN = FIXTURES / "golden"


def corpus_config(root: Path, **annotation) -> RunConfig:
    config = RunConfig()
    config.corpus.root = root
    config.backend = BackendConfig(kind="mock", mock_fixtures=root / "mock_fixtures.json", cache_dir=None)
    for key, value in annotation.items():
        setattr(config.annotation, key, value)
    return config


@pytest.fixture(scope="session")
def synthetic_corpus() -> Corpus:
    return load_corpus(corpus_config(SYNTHETIC))


@pytest.fixture(scope="session")
def libsolv_corpus() -> Corpus:
    return load_corpus(corpus_config(LIBSOLV))


@pytest.fixture(scope="session")
def cjson_corpus() -> Corpus:
    return load_corpus(corpus_config(CJSON))


def by_name(corpus: Corpus) -> Dict[str, FunctionRecord]:
    return {f.name: f for f in corpus.functions}


@pytest.fixture
def parse_function() -> Callable[[str], FunctionRecord]:
    """Extract the single function defined in a C snippet."""

    def _parse(source: str, file: str = "snippet.c") -> FunctionRecord:
        functions = extract_from_source(source, file).functions
        assert len(functions) == 1, [f.name for f in functions]
        return functions[0]

    return _parse


@pytest.fixture
def mock_client() -> Callable[..., LLMClient]:
    """LLMClient over an in-memory MockBackend."""

    def _make(fixtures: Dict, cache=None, max_in_flight: int = 4) -> LLMClient:
        return LLMClient(MockBackend(fixtures), GenerationConfig(), cache, max_in_flight)

    return _make


def make_annotation(name: str, arity: int, *entries: tuple, provenance: Provenance = Provenance.MANUAL) -> FunctionAnnotation:
    """``make_annotation("f", 1, ("return", "AllocSource"), (1, "FreeSink"))``."""
    built: List[AnnotationEntry] = []
    for slot, kind in entries:
        target = AnnotationTarget.ret() if slot == "return" else AnnotationTarget.param(slot)
        built.append(AnnotationEntry(target, AnnotationKind.parse(kind)))
    return FunctionAnnotation(name, name, tuple(built), provenance, arity)


def make_set(*annotations: FunctionAnnotation) -> AnnotationSet:
    result = AnnotationSet()
    for annotation in annotations:
        result.add(annotation)
    return result
