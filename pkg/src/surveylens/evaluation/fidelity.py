"""Excerpt fidelity: is each extracted excerpt a faithful quote?

Three verdicts after normalization (case, punctuation, whitespace):
verbatim when the excerpt is a contiguous substring of its source;
minor_edit when the smallest normalized edit ratio against any source
word-window stays at or below the threshold (the spelling-fix tier);
hallucination otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .. import textnorm
from ..corpus import Corpus
from ..tasks.primitives import Excerpt

VERBATIM = "verbatim"
MINOR_EDIT = "minor_edit"
HALLUCINATION = "hallucination"

DEFAULT_MINOR_EDIT_THRESHOLD = 0.1


class UnknownSourceError(ValueError):
    def __init__(self, response_id: str) -> None:
        super().__init__(f"excerpt references unknown source id {response_id!r}")
        self.response_id = response_id


@dataclass(frozen=True)
class FidelityVerdict:
    excerpt: Excerpt
    verdict: str
    normalized_edit_ratio: float

    def as_row(self) -> dict:
        return {
            "id": self.excerpt.response_id,
            "excerpt": self.excerpt.text,
            "verdict": self.verdict,
            "normalized_edit_ratio": self.normalized_edit_ratio,
        }


@dataclass(frozen=True)
class FidelityReport:
    verdicts: tuple[FidelityVerdict, ...]

    @property
    def total(self) -> int:
        return len(self.verdicts)

    @property
    def hallucinated(self) -> int:
        return sum(1 for v in self.verdicts if v.verdict == HALLUCINATION)

    @property
    def hallucination_rate(self) -> float:
        """Percent of excerpts judged hallucinated; 0.0 for no excerpts."""
        if not self.verdicts:
            return 0.0
        return self.hallucinated / self.total * 100.0

    def count(self, verdict: str) -> int:
        return sum(1 for v in self.verdicts if v.verdict == verdict)


def _source_texts(sources: Corpus | Mapping[str, str]) -> Mapping[str, str]:
    if isinstance(sources, Corpus):
        return {r.id: r.text for r in sources}
    return sources


def judge_excerpt(excerpt_text: str, source_text: str, threshold: float) -> tuple[str, float]:
    norm_excerpt = textnorm.normalize(excerpt_text)
    norm_source = textnorm.normalize(source_text)
    if norm_excerpt in norm_source:
        return VERBATIM, 0.0
    ratio = textnorm.best_window_ratio(norm_excerpt, norm_source)
    # A contiguous-match miss means ratio > 0; the boundary belongs to
    # minor_edit so the threshold reads "at most this much editing".
    if ratio <= threshold:
        return MINOR_EDIT, ratio
    return HALLUCINATION, ratio


def verify_excerpts(
    excerpts: Iterable[Excerpt],
    sources: Corpus | Mapping[str, str],
    minor_edit_threshold: float = DEFAULT_MINOR_EDIT_THRESHOLD,
) -> FidelityReport:
    if not 0 <= minor_edit_threshold < 1:
        raise ValueError("minor_edit_threshold must be in [0, 1)")
    texts = _source_texts(sources)
    verdicts: list[FidelityVerdict] = []
    for excerpt in excerpts:
        if excerpt.response_id not in texts:
            raise UnknownSourceError(excerpt.response_id)
        verdict, ratio = judge_excerpt(excerpt.text, texts[excerpt.response_id], minor_edit_threshold)
        verdicts.append(FidelityVerdict(excerpt, verdict, ratio))
    return FidelityReport(tuple(verdicts))
