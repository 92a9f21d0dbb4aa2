"""Boolean label matrix shared by the multi-label metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class AlignmentError(ValueError):
    """Row ids or tag order differ between two matrices."""


@dataclass(frozen=True)
class LabelMatrix:
    ids: tuple[str, ...]
    tags: tuple[str, ...]
    data: np.ndarray = field(repr=False)  # bool, rows x tags

    def __post_init__(self) -> None:
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("row ids must be unique")
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("tag names must be unique")
        if self.data.shape != (len(self.ids), len(self.tags)):
            raise ValueError(
                f"matrix shape {self.data.shape} does not match "
                f"{len(self.ids)} ids x {len(self.tags)} tags"
            )
        if self.data.dtype != np.bool_:
            raise ValueError("matrix must be boolean")

    @classmethod
    def from_sets(
        cls,
        rows: Iterable[tuple[str, Iterable[str]]] | Mapping[str, Iterable[str]],
        tags: Sequence[str],
    ) -> "LabelMatrix":
        if isinstance(rows, Mapping):
            rows = list(rows.items())
        else:
            rows = list(rows)
        tags = tuple(tags)
        position = {tag: index for index, tag in enumerate(tags)}
        data = np.zeros((len(rows), len(tags)), dtype=bool)
        ids: list[str] = []
        for row_index, (row_id, labels) in enumerate(rows):
            ids.append(row_id)
            for label in labels:
                if label not in position:
                    raise ValueError(f"row {row_id!r}: label {label!r} not in the tag list")
                data[row_index, position[label]] = True
        return cls(tuple(ids), tags, data)

    def row_set(self, index: int) -> frozenset[str]:
        return frozenset(tag for tag, on in zip(self.tags, self.data[index]) if on)

    def to_sets(self) -> list[tuple[str, frozenset[str]]]:
        return [(row_id, self.row_set(index)) for index, row_id in enumerate(self.ids)]

    def restrict(self, keep_ids: Sequence[str]) -> "LabelMatrix":
        """Sub-matrix over keep_ids, in the given order."""
        index_of = {row_id: index for index, row_id in enumerate(self.ids)}
        missing = [i for i in keep_ids if i not in index_of]
        if missing:
            raise AlignmentError(f"unknown row id(s): {missing[:5]}")
        picked = [index_of[i] for i in keep_ids]
        return LabelMatrix(tuple(keep_ids), self.tags, self.data[picked])


def require_aligned(pred: LabelMatrix, truth: LabelMatrix) -> None:
    if pred.tags != truth.tags:
        raise AlignmentError(
            f"tag order differs: {list(pred.tags)} vs {list(truth.tags)}"
        )
    if pred.ids != truth.ids:
        only_pred = sorted(set(pred.ids) - set(truth.ids))
        only_truth = sorted(set(truth.ids) - set(pred.ids))
        if only_pred or only_truth:
            raise AlignmentError(
                f"row ids differ; only in prediction: {only_pred[:5]}, "
                f"only in truth: {only_truth[:5]}"
            )
        raise AlignmentError("row ids match as sets but are ordered differently")
