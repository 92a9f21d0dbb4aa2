import json
import random

import pytest

from surveylens.corpus import (
    DEFAULT_QUESTION_TEXTS,
    AnnotationSet,
    Corpus,
    CorpusError,
    Provenance,
    SurveyResponse,
    clean,
    export_corpus,
    filter_questions,
    load_annotation_set,
    load_corpus,
    sample,
    save_annotation_set,
    validate_annotations,
)

from conftest import corpus_of, response


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_three_rows(tmp_path):
    path = _write(
        tmp_path / "c.csv",
        "id,question_id,text\nr1,Q1,Loved it\nr2,Q2,More videos\nr3,Q3,Nothing to add really\n",
    )
    corpus = load_corpus(path)
    assert len(corpus) == 3
    assert corpus.ids() == ("r1", "r2", "r3")
    assert corpus.by_id("r2").text == "More videos"


def test_load_fills_default_question_text(tmp_path):
    path = _write(tmp_path / "c.csv", "id,question_id,text\nr1,Q3,Fix the audio\n")
    corpus = load_corpus(path)
    assert corpus.by_id("r1").question_text == DEFAULT_QUESTION_TEXTS["Q3"]


def test_load_keeps_explicit_question_text(tmp_path):
    path = _write(
        tmp_path / "c.csv",
        "id,question_id,question_text,text\nr1,QX,Custom question?,Answer\n",
    )
    assert load_corpus(path).by_id("r1").question_text == "Custom question?"


def test_load_trims_text(tmp_path):
    path = _write(tmp_path / "c.csv", 'id,question_id,text\nr1,Q1,"  great course  "\n')
    assert load_corpus(path).by_id("r1").text == "great course"


def test_load_duplicate_id_names_it(tmp_path):
    path = _write(
        tmp_path / "c.csv",
        "id,question_id,text\nr7,Q1,first\nr7,Q2,second\n",
    )
    with pytest.raises(CorpusError, match="r7"):
        load_corpus(path)


def test_load_jsonl_missing_text_cites_line(tmp_path):
    path = _write(
        tmp_path / "c.jsonl",
        '{"id": "r1", "question_id": "Q1", "text": "fine"}\n{"id": "r2", "question_id": "Q2"}\n',
    )
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(path)


def test_load_csv_missing_column_cites_row(tmp_path):
    # A short row yields empty text (tolerated); a header missing a
    # required column fails up front.
    path = _write(tmp_path / "c.csv", "id,text\nr1,hello\n")
    with pytest.raises(CorpusError, match="question_id"):
        load_corpus(path)


def test_load_jsonl_invalid_json_cites_line(tmp_path):
    path = _write(tmp_path / "c.jsonl", '{"id": "r1", "question_id": "Q1", "text": "ok"}\n{broken\n')
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(path)


def test_load_unknown_format(tmp_path):
    path = _write(tmp_path / "c.txt", "id,question_id,text\n")
    with pytest.raises(CorpusError, match="format"):
        load_corpus(path, format="xml")


def test_load_metadata_round_trips(tmp_path):
    path = _write(
        tmp_path / "c.jsonl",
        '{"id": "r1", "question_id": "Q1", "text": "ok", "course": "anatomy"}\n',
    )
    corpus = load_corpus(path)
    assert corpus.by_id("r1").metadata == {"course": "anatomy"}


# --- cleaning ---------------------------------------------------------------


def test_clean_drops_sentinels_and_reports():
    corpus = corpus_of(
        ("r1", "NA"),
        ("r2", "  none "),
        ("r3", "Real feedback"),
        ("r4", ""),
        ("r5", "-"),
        ("r6", "N/A"),
        ("r7", "  padded but real  "),
    )
    cleaned = clean(corpus)
    assert cleaned.ids() == ("r3", "r7")
    assert cleaned.by_id("r7").text == "padded but real"
    assert cleaned.provenance.cleaning_report == {
        "na": 1,
        "none": 1,
        "<empty>": 1,
        "-": 1,
        "n/a": 1,
    }
    assert cleaned.provenance.removed_total == len(corpus) - len(cleaned)


def test_clean_is_idempotent():
    corpus = corpus_of(("r1", "NA"), ("r2", "keep me"), ("r3", " keep too "))
    once = clean(corpus)
    twice = clean(once)
    assert twice.responses == once.responses
    assert twice.provenance.cleaning_report == once.provenance.cleaning_report


def test_clean_custom_sentinels():
    corpus = corpus_of(("r1", "skip"), ("r2", "keep"))
    cleaned = clean(corpus, sentinels=("skip",))
    assert cleaned.ids() == ("r2",)


def test_clean_requires_sentinels():
    with pytest.raises(CorpusError):
        clean(corpus_of(("r1", "x")), sentinels=())


# --- filter and sample --------------------------------------------------------


def _multi_question_corpus():
    rows = []
    for qid in ("Q1", "Q2", "Q3"):
        for i in range(6):
            rows.append(response(f"{qid}-{i}", f"comment {i} for {qid}", qid=qid))
    return Corpus(tuple(rows), Provenance(source="synthetic"))


def test_filter_keeps_matching_rows_in_order():
    corpus = _multi_question_corpus()
    filtered = filter_questions(corpus, ["Q1"])
    assert [r.question_id for r in filtered] == ["Q1"] * 6
    assert filtered.ids() == tuple(f"Q1-{i}" for i in range(6))


def test_filter_absent_question_yields_empty():
    corpus = _multi_question_corpus()
    assert len(filter_questions(corpus, ["Q9"])) == 0


def test_filter_identity():
    corpus = _multi_question_corpus()
    assert filter_questions(corpus, ["Q1", "Q2", "Q3"]).responses == corpus.responses


def test_filter_rejects_empty_selector():
    with pytest.raises(CorpusError):
        filter_questions(_multi_question_corpus(), [])


def test_sample_deterministic():
    corpus = _multi_question_corpus()
    assert sample(corpus, 3, seed=1).ids() == sample(corpus, 3, seed=1).ids()


def test_sample_sizes_and_clamp():
    corpus = _multi_question_corpus()
    sampled = sample(corpus, 4, seed=5)
    for qid in ("Q1", "Q2", "Q3"):
        assert sum(1 for r in sampled if r.question_id == qid) == 4
    assert len(sample(corpus, 10, seed=5)) == len(corpus)  # clamp


def test_sample_preserves_corpus_order():
    corpus = _multi_question_corpus()
    sampled = sample(corpus, 3, seed=2)
    positions = [corpus.ids().index(i) for i in sampled.ids()]
    assert positions == sorted(positions)


def test_filter_then_sample_commutes():
    # Per-question RNG streams make sampling insensitive to which other
    # questions are present.
    corpus = _multi_question_corpus()
    for seed in range(10):
        a = sample(filter_questions(corpus, ["Q2"]), 3, seed=seed).ids()
        b = filter_questions(sample(corpus, 3, seed=seed), ["Q2"]).ids()
        assert a == b


# --- export / round-trip ------------------------------------------------------


@pytest.mark.parametrize("format", ["csv", "jsonl"])
def test_export_round_trips(tmp_path, format):
    corpus = Corpus(
        (
            SurveyResponse("r1", "Q1", 'tricky, "quoted" text', "Question one?", {"course": "x"}),
            SurveyResponse("r2", "Q2", "plain", "Question two?"),
        ),
        Provenance(source="orig", cleaning_report={"na": 2}),
    )
    path = tmp_path / f"out.{format}"
    sidecar = export_corpus(corpus, path, format)
    reloaded = load_corpus(path, format)
    assert reloaded.responses == corpus.responses
    report = json.loads(sidecar.read_text())
    assert report["removed"] == {"na": 2}
    assert report["rows"] == 2


def test_export_sidecar_name(tmp_path):
    corpus = corpus_of(("r1", "text"))
    sidecar = export_corpus(corpus, tmp_path / "corpus.jsonl")
    assert sidecar.name == "corpus.cleaning_report.json"


# --- annotations ---------------------------------------------------------------


def test_annotation_round_trip(tmp_path):
    annotations = AnnotationSet("a1", {"r1": frozenset({"B", "A"}), "r2": frozenset()})
    path = tmp_path / "a1.jsonl"
    save_annotation_set(annotations, path, tag_order=["A", "B"])
    lines = path.read_text().splitlines()
    assert json.loads(lines[0]) == {"id": "r1", "labels": ["A", "B"]}
    loaded = load_annotation_set(path)
    assert loaded.annotator_id == "a1"
    assert loaded.rows == annotations.rows


def test_load_annotations_duplicate_id(tmp_path):
    path = tmp_path / "a.jsonl"
    path.write_text('{"id": "r1", "labels": []}\n{"id": "r1", "labels": ["A"]}\n')
    with pytest.raises(CorpusError, match="duplicate"):
        load_annotation_set(path)


def test_validate_annotations_checks_ids_and_vocabulary():
    corpus = corpus_of(("r1", "a"), ("r2", "b"))
    good = AnnotationSet("a1", {"r1": frozenset({"A"})})
    validate_annotations(good, corpus, tag_names=["A", "B"])
    with pytest.raises(CorpusError, match="unknown"):
        validate_annotations(AnnotationSet("a1", {"rX": frozenset()}), corpus)
    with pytest.raises(CorpusError, match="vocabulary"):
        validate_annotations(good, corpus, tag_names=["B"])


def test_duplicate_response_id_rejected():
    with pytest.raises(CorpusError, match="duplicate"):
        Corpus((response("r1", "a"), response("r1", "b")), Provenance(source="x"))
