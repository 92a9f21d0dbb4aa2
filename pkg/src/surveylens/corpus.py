"""Survey corpus ingestion, cleaning, filtering, sampling, and export.

Input rows are (id, question_id, text) triples with optional question
text and arbitrary extra string metadata.  Cleaning drops low-content
sentinel answers ("na", "none", ...) and records how many rows each
sentinel removed so reports can state the effective sample size.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

# Question ids used throughout the bundled fixtures; custom corpora may
# carry their own question_text per row instead.
DEFAULT_QUESTION_TEXTS: Mapping[str, str] = {
    "Q1": "Please describe the best parts of this course.",
    "Q2": "What parts of the experience enhanced your learning of the concepts most?",
    "Q3": "What can we do to improve this course?",
    "Q4": "Please provide any further suggestions, comments, or ideas you have for this series.",
}

# Compared case-insensitively after trimming whitespace.
DEFAULT_SENTINELS: tuple[str, ...] = ("na", "n/a", "none", "nothing", "-", "")

_FORMATS = ("csv", "jsonl")
_REQUIRED_COLUMNS = ("id", "question_id", "text")


class CorpusError(ValueError):
    """Malformed corpus input (bad row, duplicate id, unknown format...)."""


@dataclass(frozen=True)
class SurveyResponse:
    id: str
    question_id: str
    text: str
    question_text: str = ""
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("response id must be non-empty")
        if not self.question_id:
            raise CorpusError(f"response {self.id!r}: question_id must be non-empty")


@dataclass(frozen=True)
class Provenance:
    source: str
    cleaning_report: Mapping[str, int] = field(default_factory=dict)

    @property
    def removed_total(self) -> int:
        return sum(self.cleaning_report.values())


@dataclass(frozen=True)
class Corpus:
    responses: tuple[SurveyResponse, ...]
    provenance: Provenance

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for response in self.responses:
            if response.id in seen:
                raise CorpusError(f"duplicate response id {response.id!r}")
            seen.add(response.id)

    def __len__(self) -> int:
        return len(self.responses)

    def __iter__(self) -> Iterator[SurveyResponse]:
        return iter(self.responses)

    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.responses)

    def by_id(self, response_id: str) -> SurveyResponse:
        for response in self.responses:
            if response.id == response_id:
                return response
        raise KeyError(response_id)

    def question_ids(self) -> tuple[str, ...]:
        ordered: list[str] = []
        for response in self.responses:
            if response.question_id not in ordered:
                ordered.append(response.question_id)
        return tuple(ordered)


def _fill_question_text(row: dict[str, str]) -> str:
    text = row.get("question_text", "") or ""
    if not text:
        text = DEFAULT_QUESTION_TEXTS.get(row.get("question_id", ""), "")
    return text


def _response_from_mapping(raw: Mapping[str, object], where: str) -> SurveyResponse:
    for column in _REQUIRED_COLUMNS:
        if column not in raw or raw[column] is None:
            raise CorpusError(f"{where}: missing required field {column!r}")
    known = {"id", "question_id", "text", "question_text"}
    metadata = {
        key: str(value)
        for key, value in raw.items()
        if key not in known and value not in (None, "")
    }
    row = {key: str(raw.get(key, "") or "") for key in known}
    return SurveyResponse(
        id=row["id"],
        question_id=row["question_id"],
        # Stored as-is except trimming: later excerpt verification checks
        # model output verbatim against this text.
        text=row["text"].strip(),
        question_text=_fill_question_text(row),
        metadata=metadata,
    )


def load_corpus(path: str | Path, format: str | None = None) -> Corpus:
    """Load a corpus from csv (RFC 4180, header required) or jsonl.

    With format=None the file suffix decides.  Errors name the offending
    row/line number, counting the csv header as line 1.
    """
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    if format not in _FORMATS:
        raise CorpusError(f"unknown corpus format {format!r}; expected one of {_FORMATS}")

    responses: list[SurveyResponse] = []
    if format == "csv":
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None:
                raise CorpusError(f"{path}: empty file, expected a header row")
            missing = [c for c in _REQUIRED_COLUMNS if c not in reader.fieldnames]
            if missing:
                raise CorpusError(f"{path}: header is missing column(s) {missing}")
            for number, row in enumerate(reader, start=2):
                if None in row:
                    raise CorpusError(f"{path}: row {number} has more fields than the header")
                responses.append(_response_from_mapping(row, f"{path}: row {number}"))
    else:
        with path.open(encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}: line {number}: invalid json ({exc.msg})") from exc
                if not isinstance(raw, dict):
                    raise CorpusError(f"{path}: line {number}: expected a json object")
                responses.append(_response_from_mapping(raw, f"{path}: line {number}"))
    return Corpus(tuple(responses), Provenance(source=str(path)))


def clean(corpus: Corpus, sentinels: Sequence[str] = DEFAULT_SENTINELS) -> Corpus:
    """Drop rows whose trimmed, lowercased text equals a sentinel; trim
    the text of retained rows.

    The cleaning report counts removals per sentinel (the empty-string
    sentinel is reported as "<empty>").  Idempotent.
    """
    if not sentinels:
        raise CorpusError("sentinel list must be non-empty")
    normalized = {s.strip().lower() for s in sentinels}
    report: dict[str, int] = dict(corpus.provenance.cleaning_report)
    kept: list[SurveyResponse] = []
    for response in corpus.responses:
        trimmed = response.text.strip()
        if trimmed.lower() in normalized:
            label = trimmed.lower() if trimmed else "<empty>"
            report[label] = report.get(label, 0) + 1
        else:
            if trimmed != response.text:
                response = replace(response, text=trimmed)
            kept.append(response)
    provenance = Provenance(source=corpus.provenance.source, cleaning_report=report)
    return Corpus(tuple(kept), provenance)


def filter_questions(corpus: Corpus, question_ids: Sequence[str]) -> Corpus:
    """Keep rows whose question_id is in the set; an empty result is legal."""
    if not question_ids:
        raise CorpusError("question_ids must be non-empty")
    wanted = set(question_ids)
    kept = tuple(r for r in corpus.responses if r.question_id in wanted)
    return Corpus(kept, corpus.provenance)


def sample(corpus: Corpus, n_per_question: int, seed: int) -> Corpus:
    """Take up to n responses per question, deterministically.

    Each question uses its own RNG stream seeded from (seed, question_id),
    so sampling commutes with question filtering.  Original corpus order
    is preserved.
    """
    if n_per_question < 0:
        raise CorpusError("n_per_question must be >= 0")
    chosen: set[str] = set()
    for question_id in corpus.question_ids():
        ids = [r.id for r in corpus.responses if r.question_id == question_id]
        rng = random.Random(f"{seed}:{question_id}")
        if len(ids) > n_per_question:
            ids = rng.sample(ids, n_per_question)
        chosen.update(ids)
    kept = tuple(r for r in corpus.responses if r.id in chosen)
    return Corpus(kept, corpus.provenance)


def export_corpus(corpus: Corpus, path: str | Path, format: str | None = None) -> Path:
    """Write the corpus back out (csv or jsonl) plus a cleaning-report
    sidecar `<name>.cleaning_report.json`.  Returns the sidecar path."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    if format not in _FORMATS:
        raise CorpusError(f"unknown corpus format {format!r}; expected one of {_FORMATS}")

    metadata_keys: list[str] = []
    for response in corpus.responses:
        for key in response.metadata:
            if key not in metadata_keys:
                metadata_keys.append(key)

    if format == "csv":
        header = ["id", "question_id", "question_text", "text", *metadata_keys]
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for r in corpus.responses:
                writer.writerow(
                    [r.id, r.question_id, r.question_text, r.text]
                    + [r.metadata.get(k, "") for k in metadata_keys]
                )
    else:
        with path.open("w", encoding="utf-8") as handle:
            for r in corpus.responses:
                row: dict[str, object] = {
                    "id": r.id,
                    "question_id": r.question_id,
                    "question_text": r.question_text,
                    "text": r.text,
                }
                row.update(r.metadata)
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")

    sidecar = path.with_name(path.stem + ".cleaning_report.json")
    sidecar.write_text(
        json.dumps(
            {
                "source": corpus.provenance.source,
                "rows": len(corpus),
                "removed": dict(corpus.provenance.cleaning_report),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return sidecar


@dataclass(frozen=True)
class AnnotationSet:
    """One rater's multi-label annotations: response id -> set of tags."""

    annotator_id: str
    rows: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        if not self.annotator_id:
            raise CorpusError("annotator_id must be non-empty")

    def ids(self) -> frozenset[str]:
        return frozenset(self.rows)


def load_annotation_set(path: str | Path, annotator_id: str | None = None) -> AnnotationSet:
    """Read jsonl rows of {"id": ..., "labels": [...]}.

    annotator_id defaults to the file stem.  Duplicate ids are an error.
    """
    path = Path(path)
    rows: dict[str, frozenset[str]] = {}
    with path.open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {number}: invalid json ({exc.msg})") from exc
            if not isinstance(raw, dict) or "id" not in raw or "labels" not in raw:
                raise CorpusError(f'{path}: line {number}: expected {{"id", "labels"}}')
            rid = str(raw["id"])
            labels = raw["labels"]
            if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
                raise CorpusError(f"{path}: line {number}: labels must be a list of strings")
            if rid in rows:
                raise CorpusError(f"{path}: line {number}: duplicate id {rid!r}")
            rows[rid] = frozenset(labels)
    return AnnotationSet(annotator_id or path.stem, rows)


def save_annotation_set(annotations: AnnotationSet, path: str | Path, tag_order: Sequence[str] | None = None) -> None:
    """Write jsonl rows sorted by id; labels follow tag_order when given."""

    def order(labels: frozenset[str]) -> list[str]:
        if tag_order is None:
            return sorted(labels)
        ranked = [t for t in tag_order if t in labels]
        return ranked + sorted(labels - set(ranked))

    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for rid in sorted(annotations.rows):
            row = {"id": rid, "labels": order(annotations.rows[rid])}
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def validate_annotations(
    annotations: AnnotationSet,
    corpus: Corpus | None = None,
    tag_names: Sequence[str] | None = None,
) -> None:
    """Check ids against a corpus and labels against a tag vocabulary."""
    if corpus is not None:
        unknown_ids = annotations.ids() - set(corpus.ids())
        if unknown_ids:
            raise CorpusError(
                f"annotations from {annotations.annotator_id!r} reference unknown "
                f"response id(s): {sorted(unknown_ids)[:5]}"
            )
    if tag_names is not None:
        vocabulary = set(tag_names)
        for rid, labels in annotations.rows.items():
            stray = labels - vocabulary
            if stray:
                raise CorpusError(
                    f"annotations from {annotations.annotator_id!r}, id {rid!r}: "
                    f"label(s) outside the tag vocabulary: {sorted(stray)}"
                )


__all__ = [
    "AnnotationSet",
    "Corpus",
    "CorpusError",
    "DEFAULT_QUESTION_TEXTS",
    "DEFAULT_SENTINELS",
    "Provenance",
    "SurveyResponse",
    "clean",
    "export_corpus",
    "filter_questions",
    "load_annotation_set",
    "load_corpus",
    "sample",
    "save_annotation_set",
    "validate_annotations",
]
