"""Precision/recall scoring, set intersection and label loading."""

import pytest

from src.annotate import AnnotationEngine, heuristic_annotations
from src.config import AnnotationConfig, GenerationConfig
from src.emit import build_codeql_model_table
from src.errors import GroundTruthError
from src.evaluate import EvaluationReport, FunctionVerdict, intersect, load_ground_truth, score
from src.llm import LLMClient, MockBackend

from .conftest import CJSON, make_annotation, make_set

# (tp, fp, fn, precision, recall, total annotated) for three models, each
# with and without post-filter at two context depths.
REFERENCE_ROWS = [
    (31, 23, 17, 0.574, 0.646, 54),
    (30, 12, 18, 0.714, 0.625, 42),
    (29, 23, 18, 0.558, 0.617, 52),
    (28, 13, 19, 0.683, 0.596, 41),
    (28, 12, 20, 0.700, 0.583, 40),
    (28, 2, 20, 0.933, 0.583, 30),
    (23, 14, 24, 0.622, 0.489, 37),
    (22, 6, 25, 0.786, 0.468, 28),
    (31, 12, 16, 0.721, 0.660, 43),
    (29, 3, 18, 0.906, 0.617, 32),
    (28, 10, 20, 0.737, 0.583, 38),
    (27, 2, 21, 0.931, 0.562, 29),
]


def synthetic_sets(tp, fp, fn):
    """Predicted/labelled sets realizing the given counts."""
    alloc = ("return", "AllocSource")
    labels = [make_annotation(f"hit{i}", 0, alloc) for i in range(tp)]
    labels += [make_annotation(f"miss{i}", 0, alloc) for i in range(fn)]
    predicted = [make_annotation(f"hit{i}", 0, alloc) for i in range(tp)]
    predicted += [make_annotation(f"extra{i}", 0, alloc) for i in range(fp)]
    return make_set(*predicted), make_set(*labels)


@pytest.mark.parametrize("tp, fp, fn, precision, recall, total", REFERENCE_ROWS)
def test_reference_metrics(tp, fp, fn, precision, recall, total):
    report = EvaluationReport.from_counts(tp, fp, fn)
    assert report.precision == pytest.approx(precision, abs=6e-4)
    assert report.recall == pytest.approx(recall, abs=6e-4)
    assert report.total_annotated == total


@pytest.mark.parametrize("tp, fp, fn, precision, recall, total", REFERENCE_ROWS[::3])
def test_score_reproduces_counts(tp, fp, fn, precision, recall, total):
    report = score(*synthetic_sets(tp, fp, fn))
    assert (report.tp, report.fp, report.fn, report.total_annotated) == (tp, fp, fn, total)


def test_identity():
    labels = make_set(
        make_annotation("a", 1, ("return", "AllocSource")),
        make_annotation("b", 1, (1, "FreeSink")),
    )
    report = score(labels, labels)
    assert (report.tp, report.fp, report.fn) == (2, 0, 0)
    assert report.precision == report.recall == 1.0


def test_undefined_metrics():
    report = score(make_set(), make_set())
    assert report.precision is None and report.recall is None
    assert report.to_dict()["precision"] is None
    assert report.to_text().splitlines()[1].split()[3:5] == ["undefined", "undefined"]


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        EvaluationReport.from_counts(1, -1, 0)


def test_wrong_label_is_false_positive_only():
    predicted = make_set(make_annotation("f", 1, (1, "FreeSink")))
    labels = make_set(
        make_annotation("f", 1, ("return", "AllocSource")),
        make_annotation("g", 1, ("return", "AllocSource")),
    )
    report = score(predicted, labels)
    assert report.per_function == {"f": FunctionVerdict.FP, "g": FunctionVerdict.FN}
    assert report.tp + report.fn < len(labels)


def test_kind_profile_ignores_slots_unless_strict():
    predicted = make_set(make_annotation("init", 2, (2, "AllocSource")))
    labels = make_set(make_annotation("init", 2, ("return", "AllocSource")))
    assert score(predicted, labels).tp == 1
    assert score(predicted, labels, strict_slots=True).fp == 1


def test_roles_are_not_symmetric():
    predicted, labels = synthetic_sets(3, 2, 1)
    forward, backward = score(predicted, labels), score(labels, predicted)
    assert (forward.fp, forward.fn) == (2, 1)
    assert (backward.fp, backward.fn) == (1, 2)
    assert forward.precision != backward.precision


def test_report_text_lists_errors():
    predicted, labels = synthetic_sets(1, 1, 1)
    lines = score(predicted, labels).to_text().splitlines()
    assert lines[0].split() == ["TP", "FP", "FN", "Prec", "Rec", "#"]
    assert lines[1].split() == ["1", "1", "1", "0.500", "0.500", "2"]
    assert lines[2:] == ["FP: extra0", "FN: miss0"]


def test_intersect():
    a = make_set(*(make_annotation(n, 0, ("return", "AllocSource")) for n in ("x", "y", "z")))
    b = make_set(
        make_annotation("y", 1, (1, "FreeSink")),
        make_annotation("w", 0, ("return", "AllocSource")),
    )
    report = intersect(a, b)
    assert (report.size_a, report.size_b, report.size_both) == (3, 2, 1)
    assert report.only_a == ["x", "z"] and report.only_b == ["w"] and report.both == ["y"]
    assert report.to_text() == "A=3 B=2 A∩B=1\n"
    assert report.to_dict()["members"]["both"] == ["y"]


class TestGroundTruth:
    def test_load(self):
        labels = load_ground_truth(CJSON / "ground_truth.json")
        assert len(labels) == 7
        assert labels.get("cJSON_free").free_sink_positions == {1}

    def test_both_tags_rejected(self, tmp_path):
        path = tmp_path / "labels.json"
        make_set(make_annotation("f", 1, ("return", "AllocSource"), (1, "FreeSink"))).save(path)
        with pytest.raises(GroundTruthError, match="both tags"):
            load_ground_truth(path)

    def test_duplicate_name_rejected(self, tmp_path):
        path = tmp_path / "labels.json"
        path.write_text('{"functions": {"f": {"entries": []}, "f": {"entries": []}}}', encoding="utf-8")
        with pytest.raises(GroundTruthError, match="Duplicate"):
            load_ground_truth(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(GroundTruthError):
            load_ground_truth(tmp_path / "labels.json")


class TestCJSONExcerpt:
    @pytest.fixture
    def annotate(self, cjson_corpus):
        def _run(post_filter):
            client = LLMClient(MockBackend.from_file(CJSON / "mock_fixtures.json"), GenerationConfig())
            engine = AnnotationEngine(
                client, AnnotationConfig(post_filter=post_filter), aggregate_types=cjson_corpus.aggregate_types
            )
            return engine.annotate_corpus(cjson_corpus.functions, cjson_corpus.graph)

        return _run

    def test_score_with_post_filter(self, annotate):
        report = score(annotate(True), load_ground_truth(CJSON / "ground_truth.json"))
        assert (report.tp, report.fp, report.fn) == (5, 0, 2)
        assert report.per_function["cJSON_malloc"] == FunctionVerdict.FN
        assert report.per_function["cJSON_CreateString"] == FunctionVerdict.FN

    def test_score_without_post_filter(self, annotate):
        report = score(annotate(False), load_ground_truth(CJSON / "ground_truth.json"))
        assert (report.tp, report.fp, report.fn) == (5, 1, 2)
        assert report.per_function["cJSON_GetObjectItem"] == FunctionVerdict.FP

    def test_heuristic_overlap(self, annotate, cjson_corpus):
        report = intersect(heuristic_annotations(cjson_corpus.functions), annotate(True))
        assert (report.size_a, report.size_b, report.size_both) == (1, 5, 0)

    def test_codeql_rows(self, annotate):
        table = build_codeql_model_table(annotate(True))
        assert [row[0] for row in table.rows] == ["cJSON_CreateObject", "cJSON_New_Item", "cJSON_strdup"]
        assert table.dropped == 2
