"""Annotation model, slot mapping, post-filter, heuristic and engine."""

import json

import pytest

from src.annotate import (
    AnnotationEngine,
    AnnotationKind,
    AnnotationSet,
    AnnotationTag,
    AnnotationTarget,
    FunctionAnnotation,
    Provenance,
    annotate_corpus,
    codeql_name_heuristic,
    heuristic_annotations,
    map_findings_to_annotations,
    post_filter,
    returned_identifiers,
    struct_parameters,
)
from src.config import AnnotationConfig, GenerationConfig
from src.errors import AnnotationError, BackendError
from src.ingest import build_call_graph, extract_from_source
from src.llm import AllocationFindings, CompletionBackend, LLMClient, MockBackend

from .conftest import SYNTHETIC, by_name, make_annotation, make_set

SYNTHETIC_ANSWERS = json.loads((SYNTHETIC / "mock_fixtures.json").read_text(encoding="utf-8"))


class FailingBackend(CompletionBackend):
    @property
    def backend_id(self):
        return "failing"

    def generate(self, prompt, config):
        raise BackendError("connection refused")


class RecordingBackend(MockBackend):
    def __init__(self, fixtures):
        super().__init__(fixtures)
        self.prompts = []

    def generate(self, prompt, config):
        self.prompts.append(prompt)
        return super().generate(prompt, config)


def findings(allocated=(), deallocated=()):
    return AllocationFindings(list(allocated), list(deallocated))


class TestModels:
    def test_kind_text(self):
        assert str(AnnotationKind.alloc_source()) == "AllocSource::1"
        assert str(AnnotationKind.free_sink()) == "FreeSink::3"
        assert AnnotationKind.parse("FreeSink") == AnnotationKind.free_sink()
        assert AnnotationKind.parse("AllocSource::2") == AnnotationKind.alloc_source(2)

    @pytest.mark.parametrize("text", ["Alloc::1", "AllocSource::x", "FreeSink::0", ""])
    def test_kind_parse_errors(self, text):
        with pytest.raises(AnnotationError):
            AnnotationKind.parse(text)

    def test_targets(self):
        assert str(AnnotationTarget.ret()) == "return"
        assert str(AnnotationTarget.param(2)) == "param:2"
        assert AnnotationTarget.parse("param:2") == AnnotationTarget.parse(2) == AnnotationTarget.param(2)
        with pytest.raises(AnnotationError):
            AnnotationTarget.param(0)
        with pytest.raises(AnnotationError):
            AnnotationTarget.parse("arg1")

    def test_one_kind_per_target(self):
        with pytest.raises(AnnotationError):
            make_annotation("f", 1, (1, "AllocSource"), (1, "FreeSink"))

    def test_slot_beyond_arity(self):
        with pytest.raises(AnnotationError, match="arity"):
            make_annotation("f", 1, (2, "FreeSink"))

    def test_entries_are_sorted(self):
        annotation = make_annotation("f", 2, (2, "FreeSink"), ("return", "AllocSource"))
        assert [str(e.target) for e in annotation.entries] == ["return", "param:2"]
        assert annotation.has_return_alloc
        assert annotation.free_sink_positions == {2}
        assert annotation.tags == {AnnotationTag.ALLOC_SOURCE, AnnotationTag.FREE_SINK}

    def test_set_skips_empty_and_rejects_duplicates(self):
        annotations = AnnotationSet()
        assert annotations.add(FunctionAnnotation("f", "f")) is False
        assert len(annotations) == 0
        assert annotations.add(make_annotation("f", 0, ("return", "AllocSource")))
        with pytest.raises(AnnotationError, match="Duplicate"):
            annotations.add(make_annotation("f", 0, ("return", "AllocSource")))

    def test_json_duplicate_key_rejected(self):
        text = '{"functions": {"f": {"entries": []}, "f": {"entries": []}}}'
        with pytest.raises(AnnotationError, match="Duplicate"):
            AnnotationSet.from_json(text)

    def test_json_form(self, tmp_path):
        annotations = make_set(
            make_annotation("zeta", 1, (1, "FreeSink")),
            make_annotation("alpha", 1, ("return", "AllocSource")),
        )
        data = json.loads(annotations.to_json())
        assert list(data["functions"]) == ["alpha", "zeta"]
        assert data["functions"]["zeta"] == {
            "arity": 1,
            "entries": [{"kind": "FreeSink", "qualifier": 3, "slot": "param:1"}],
            "provenance": "Manual",
        }
        path = tmp_path / "a.json"
        annotations.save(path)
        loaded = AnnotationSet.load(path)
        assert loaded.functions == annotations.functions
        assert path.read_text(encoding="utf-8") == annotations.to_json()

    @pytest.mark.parametrize(
        "text",
        [
            "[]",
            '{"functions": []}',
            '{"functions": {"f": {"entries": [{"slot": "return", "kind": "Leak"}]}}}',
            '{"functions": {"f": {"entries": [], "provenance": "Oracle"}}}',
            '{"functions": {"f": {"entries": [], "arity": -1}}}',
            "not json",
        ],
    )
    def test_invalid_json(self, text):
        with pytest.raises(AnnotationError):
            AnnotationSet.from_json(text)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(AnnotationError):
            AnnotationSet.load(tmp_path / "missing.json")


class TestMapper:
    def test_returned_allocation(self, parse_function):
        fn = parse_function("void *mk(size_t n) { void *p = malloc(n); return p; }")
        annotation = map_findings_to_annotations(fn, findings(["p"]))
        assert [(str(e.target), str(e.kind)) for e in annotation.entries] == [("return", "AllocSource::1")]
        assert annotation.provenance == Provenance.LLM
        assert annotation.arity == 1

    def test_parenthesized_return(self, parse_function):
        fn = parse_function("char *dup(void) { char *s = malloc(4); return (s); }")
        assert map_findings_to_annotations(fn, findings(["s"])).has_return_alloc

    def test_out_parameter(self, parse_function):
        fn = parse_function("int init(char **out, size_t n) { *out = malloc(n); return 0; }")
        annotation = map_findings_to_annotations(fn, findings(["out"]))
        assert annotation.kind_at(AnnotationTarget.param(1)) == AnnotationKind.alloc_source()

    def test_parameter_reassigned_locally_is_not_annotated(self, parse_function):
        fn = parse_function("void f(char *p) { p = malloc(1); use(p); }")
        assert map_findings_to_annotations(fn, findings(["p"])).is_empty

    def test_freed_parameter(self, parse_function):
        fn = parse_function("void rel(void *a, void *b) { free(b); }")
        annotation = map_findings_to_annotations(fn, findings(deallocated=["b"]), free_qualifier=5)
        assert annotation.kind_at(AnnotationTarget.param(2)) == AnnotationKind.free_sink(5)
        assert annotation.kind_at(AnnotationTarget.param(1)) is None

    def test_local_allocations_are_ignored(self, parse_function):
        fn = parse_function("int sum(int n) { int *t = malloc(n); free(t); return n; }")
        assert map_findings_to_annotations(fn, findings(["t"], ["t"])).is_empty

    def test_conflicting_slot_is_dropped(self, parse_function):
        fn = parse_function("void swap(void **p) { free(*p); *p = malloc(8); }")
        diagnostics = []
        annotation = map_findings_to_annotations(fn, findings(["p"], ["p"]), diagnostics=diagnostics)
        assert annotation.is_empty
        assert len(diagnostics) == 1 and "param:1" in diagnostics[0]

    def test_unknown_names_are_ignored(self, parse_function):
        fn = parse_function("void *mk(void) { return malloc(1); }")
        assert map_findings_to_annotations(fn, findings(["ghost"], ["phantom"])).is_empty

    def test_returned_identifiers(self, parse_function):
        fn = parse_function(
            "char *pick(int c) {\n"
            "  char *a = 0, *b = 0;\n"
            "  // return ghost;\n"
            "  if (c) return (a);\n"
            "  return b;\n"
            "}\n"
        )
        assert returned_identifiers(fn) == {"a", "b"}


class TestPostFilter:
    def test_getter_loses_return_allocation(self, synthetic_corpus, mock_client):
        functions = by_name(synthetic_corpus)
        fn = functions["pool_chksum_get"]
        initial = map_findings_to_annotations(fn, findings(["c"]))
        filtered = post_filter(initial, fn, [], mock_client(SYNTHETIC_ANSWERS))
        assert filtered.is_empty
        assert filtered.provenance == Provenance.LLM_POST_FILTERED

    def test_negative_answer_keeps_annotation(self, synthetic_corpus, mock_client):
        fn = by_name(synthetic_corpus)["node_create"]
        initial = map_findings_to_annotations(fn, findings(["node"]))
        filtered = post_filter(initial, fn, [], mock_client(SYNTHETIC_ANSWERS))
        assert filtered.entries == initial.entries
        assert filtered.provenance == Provenance.LLM_POST_FILTERED

    def test_not_applicable_without_struct_parameter(self, synthetic_corpus, mock_client):
        fn = by_name(synthetic_corpus)["buf_new"]
        client = mock_client(SYNTHETIC_ANSWERS)
        initial = map_findings_to_annotations(fn, findings(["buf"]))
        assert post_filter(initial, fn, [], client) is initial
        assert client.backend_calls == 0

    def test_param_entries_are_never_touched(self, parse_function, mock_client):
        fn = parse_function("struct S *take(struct S *s) { struct S *r = s->next; free(s); return r; }")
        initial = map_findings_to_annotations(fn, findings(["r"], ["s"]))
        filtered = post_filter(initial, fn, [], mock_client({"take": {"postfilter": '{"answer": "yes"}'}}))
        assert [str(e.target) for e in filtered.entries] == ["param:1"]

    def test_requires_llm_provenance(self, synthetic_corpus, mock_client):
        fn = by_name(synthetic_corpus)["node_create"]
        manual = make_annotation("node_create", 2, ("return", "AllocSource"))
        with pytest.raises(AnnotationError):
            post_filter(manual, fn, [], mock_client({}))

    def test_backend_failure_keeps_annotation(self, synthetic_corpus):
        fn = by_name(synthetic_corpus)["node_create"]
        initial = map_findings_to_annotations(fn, findings(["node"]))
        diagnostics = []
        client = LLMClient(FailingBackend(), GenerationConfig())
        assert post_filter(initial, fn, [], client, diagnostics=diagnostics) is initial
        assert "post-filter query failed" in diagnostics[0]

    def test_struct_parameters(self, parse_function):
        fn = parse_function(
            "int f(struct Pool *pool, const Buffer * const b, Buffer copy, union U *u, int *n) { return 0; }"
        )
        assert struct_parameters(fn, {"Buffer"}) == [("Pool", "pool"), ("Buffer", "b"), ("U", "u")]
        assert struct_parameters(fn) == [("Pool", "pool"), ("U", "u")]


class TestHeuristic:
    @pytest.mark.parametrize(
        "source, expected",
        [
            ("void *xmalloc(size_t n) { return 0; }", True),
            ("char *pool_alloc(const unsigned int n) { return 0; }", True),
            ("void *Allocate(uint32_t n) { return 0; }", True),
            ("void *alloc_two(size_t a, size_t b) { return 0; }", False),
            ("int alloc_count(size_t n) { return 0; }", False),
            ("void *allocate(int n) { return 0; }", False),
            ("void *make(size_t n) { return 0; }", False),
        ],
    )
    def test_signature_rule(self, parse_function, source, expected):
        assert codeql_name_heuristic(parse_function(source)) is expected

    def test_corpus(self, cjson_corpus, synthetic_corpus):
        annotations = heuristic_annotations(cjson_corpus.functions)
        assert annotations.names() == ["cJSON_malloc"]
        assert annotations.get("cJSON_malloc").provenance == Provenance.NAME_HEURISTIC
        assert annotations.metadata["generator"] == "name-heuristic"
        assert len(heuristic_annotations(synthetic_corpus.functions)) == 0


def run_engine(corpus, answers=SYNTHETIC_ANSWERS, max_in_flight=4, **config):
    client = LLMClient(MockBackend(answers), GenerationConfig(), None, max_in_flight)
    engine = AnnotationEngine(client, AnnotationConfig(**config), aggregate_types=corpus.aggregate_types)
    return engine.annotate_corpus(corpus.functions, corpus.graph)


class TestEngine:
    @pytest.fixture(autouse=True)
    def _no_epoch(self, monkeypatch):
        monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)

    def test_synthetic_with_post_filter(self, synthetic_corpus):
        annotations = run_engine(synthetic_corpus)
        assert annotations.names() == ["buf_new", "my_free", "node_create"]
        assert annotations.get("buf_new").has_return_alloc
        assert annotations.get("buf_new").provenance == Provenance.LLM
        assert annotations.get("my_free").free_sink_positions == {1}
        assert annotations.get("node_create").provenance == Provenance.LLM_POST_FILTERED

        metadata = annotations.metadata
        assert metadata["functions_total"] == 12
        assert metadata["functions_skipped"] == 1
        assert metadata["timestamp"] is None
        assert metadata["post_filter"] is True
        assert any("log_message" in d for d in metadata["diagnostics"])

    def test_synthetic_without_post_filter(self, synthetic_corpus):
        annotations = run_engine(synthetic_corpus, post_filter=False)
        assert annotations.names() == ["buf_new", "my_free", "node_create", "pool_chksum_get"]
        assert {a.provenance for a in annotations} == {Provenance.LLM}

    def test_post_filter_only_removes(self, synthetic_corpus):
        with_pf = run_engine(synthetic_corpus)
        without_pf = run_engine(synthetic_corpus, post_filter=False)
        assert set(with_pf.names()) <= set(without_pf.names())
        for annotation in with_pf:
            assert set(annotation.entries) <= set(without_pf.get(annotation.function_name).entries)

    def test_output_is_independent_of_concurrency(self, synthetic_corpus):
        serial = run_engine(synthetic_corpus, max_in_flight=1)
        parallel = run_engine(synthetic_corpus, max_in_flight=8)
        assert serial.to_json() == parallel.to_json()

    def test_source_date_epoch(self, synthetic_corpus, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        assert run_engine(synthetic_corpus).metadata["timestamp"] == "1970-01-01T00:00:00+00:00"

    def test_context_depth(self, synthetic_corpus):
        def initial_prompt_for(name, depth):
            backend = RecordingBackend(SYNTHETIC_ANSWERS)
            client = LLMClient(backend, GenerationConfig(), None, 1)
            AnnotationEngine(client, AnnotationConfig(context_depth=depth, post_filter=False)).annotate_corpus(
                synthetic_corpus.functions, synthetic_corpus.graph
            )
            return next(p.text for p in backend.prompts if p.function_name == name)

        shallow = initial_prompt_for("good_user", 0)
        deep = initial_prompt_for("good_user", 1)
        assert "void *buf_new(size_t n)" not in shallow
        assert "void *buf_new(size_t n)" in deep and "void my_free(void *buf)" in deep

    def test_empty_corpus(self):
        client = LLMClient(MockBackend({}), GenerationConfig())
        annotations = annotate_corpus([], build_call_graph([]), client)
        assert len(annotations) == 0
        assert annotations.metadata["functions_total"] == 0

    def test_backend_failure_is_fatal(self, synthetic_corpus):
        client = LLMClient(FailingBackend(), GenerationConfig())
        with pytest.raises(BackendError):
            annotate_corpus(synthetic_corpus.functions, synthetic_corpus.graph, client)

    def test_first_homonym_wins(self):
        source = "static char *helper(void) { char *h = malloc(2); return h; }\n"
        functions = extract_from_source(source, "a.c").functions + extract_from_source(source, "b.c").functions
        answers = {"helper": '{"allocated_variables": ["h"], "deallocated_variables": []}'}
        client = LLMClient(MockBackend(answers), GenerationConfig())
        annotations = annotate_corpus(functions, build_call_graph(functions), client)
        assert annotations.names() == ["helper"]
        assert annotations.get("helper").function_id == "a.c:helper:1"
        assert any("already annotated" in d for d in annotations.metadata["diagnostics"])
