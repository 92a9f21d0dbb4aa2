"""Consensus ground truth from multiple annotators, and pairwise
inter-rater agreement.

Majority is strict (> n/2 yes-votes) for any annotator count; ties never
select a tag.  Two aggregation modes: labels mode keeps every row and
selects majority-voted tags; rows mode keeps only rows where every tag
got a strict majority verdict one way or the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..corpus import AnnotationSet
from .labels import LabelMatrix
from .metrics import jaccard, mean_rounded, round_half_even

MODES = ("labels", "rows")


class CoverageError(ValueError):
    """Annotation sets do not cover identical row ids."""


def _check_coverage(annotations: Sequence[AnnotationSet]) -> tuple[str, ...]:
    reference = annotations[0].ids()
    for annotation_set in annotations[1:]:
        if annotation_set.ids() != reference:
            missing = sorted(reference - annotation_set.ids())
            extra = sorted(annotation_set.ids() - reference)
            raise CoverageError(
                f"annotator {annotation_set.annotator_id!r} coverage differs from "
                f"{annotations[0].annotator_id!r}: missing {missing[:5]}, extra {extra[:5]}"
            )
    return tuple(sorted(reference))


@dataclass(frozen=True)
class ConsensusResult:
    mode: str
    retained_ids: tuple[str, ...]
    truth: LabelMatrix
    votes: Mapping[str, Mapping[str, int]]  # id -> tag -> yes-votes
    annotator_count: int


def consensus(
    annotations: Sequence[AnnotationSet],
    tag_names: Sequence[str],
    mode: str = "labels",
) -> ConsensusResult:
    if mode not in MODES:
        raise ValueError(f"unknown consensus mode {mode!r}; expected one of {MODES}")
    if len(annotations) < 3:
        raise ValueError("consensus needs at least 3 annotators")
    ids = _check_coverage(annotations)
    tags = tuple(tag_names)
    n = len(annotations)

    votes: dict[str, dict[str, int]] = {}
    for row_id in ids:
        votes[row_id] = {
            tag: sum(1 for a in annotations if tag in a.rows[row_id]) for tag in tags
        }

    def majority_labels(row_id: str) -> frozenset[str]:
        return frozenset(tag for tag in tags if votes[row_id][tag] * 2 > n)

    if mode == "labels":
        retained = ids
    else:
        retained = tuple(
            row_id
            for row_id in ids
            if all(
                votes[row_id][tag] * 2 > n or (n - votes[row_id][tag]) * 2 > n
                for tag in tags
            )
        )

    truth = LabelMatrix.from_sets(
        [(row_id, majority_labels(row_id)) for row_id in retained], tags
    )
    return ConsensusResult(mode, retained, truth, votes, n)


@dataclass(frozen=True)
class AgreementMatrix:
    """Pairwise mean-Jaccard agreement, as percentages rounded to 2 places.

    Cells are stored rounded so exported tables and subgroup averages are
    consistent with each other.
    """

    rater_ids: tuple[str, ...]
    cells: Mapping[tuple[str, str], float]

    def pair(self, a: str, b: str) -> float:
        if (a, b) in self.cells:
            return self.cells[(a, b)]
        if (b, a) in self.cells:
            return self.cells[(b, a)]
        raise KeyError(f"no agreement cell for raters {a!r}, {b!r}")

    def pairs_within(self, rater_ids: Sequence[str]) -> list[float]:
        chosen = [r for r in self.rater_ids if r in set(rater_ids)]
        return [
            self.pair(chosen[i], chosen[j])
            for i in range(len(chosen))
            for j in range(i + 1, len(chosen))
        ]

    def subgroup_average(self, rater_ids: Sequence[str]) -> float:
        return average_pairs(self.pairs_within(rater_ids))

    def overall_average(self) -> float:
        return average_pairs(self.pairs_within(self.rater_ids))


def average_pairs(values: Sequence[float]) -> float:
    """Unweighted mean of pairwise agreement percents, half-even at 2dp."""
    if not values:
        raise ValueError("cannot average zero pairs")
    return mean_rounded(values, places=2)


def agreement_matrix(raters: Sequence[AnnotationSet]) -> AgreementMatrix:
    """Pairwise mean row-wise Jaccard between raters, as percents."""
    if len(raters) < 2:
        raise ValueError("agreement needs at least 2 raters")
    names = [r.annotator_id for r in raters]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate annotator ids: {names}")
    ids = _check_coverage(raters)
    if not ids:
        raise ValueError("raters cover no rows")
    cells: dict[tuple[str, str], float] = {}
    for i in range(len(raters)):
        for j in range(i + 1, len(raters)):
            mean = sum(
                jaccard(raters[i].rows[row_id], raters[j].rows[row_id]) for row_id in ids
            ) / len(ids)
            cells[(names[i], names[j])] = round_half_even(mean * 100.0, places=2)
    return AgreementMatrix(tuple(names), cells)
