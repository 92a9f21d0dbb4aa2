"""Deterministic classification metrics.

Multi-label conventions, fixed here once so every report agrees:
- row-wise Jaccard counts two empty sets as 1.0 (agreement that nothing
  applies);
- example-based precision/recall average per-row values, where an empty
  denominator scores 1 if the other side is empty too, else 0;
- macro metrics are unweighted means over tags; degenerate tags (no
  predicted / no true positives) contribute flagged zeros instead of
  being dropped, keeping report shapes stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Iterable, Mapping, Sequence

import numpy as np

from .labels import AlignmentError, LabelMatrix, require_aligned

SENTIMENT_CLASSES = ("negative", "neutral", "positive")
BINARY_CLASSES = ("yes", "no")


def round_half_even(value: float, places: int = 2) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_EVEN))


def mean_rounded(values: Iterable[float], places: int = 2) -> float:
    """Mean computed in exact decimal, then rounded half-even."""
    values = list(values)
    if not values:
        raise ValueError("cannot average zero values")
    total = sum((Decimal(str(v)) for v in values), Decimal(0))
    quantum = Decimal(1).scaleb(-places)
    return float((total / len(values)).quantize(quantum, rounding=ROUND_HALF_EVEN))


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


@dataclass(frozen=True)
class TagMetrics:
    tag: str
    precision: float
    recall: float
    f1: float
    support: int  # rows where the tag is true
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class MetricReport:
    rows: int
    mean_jaccard: float
    avg_precision: float  # example-based
    avg_recall: float  # example-based
    per_tag: tuple[TagMetrics, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    hamming_loss: float
    subset_accuracy: float
    flags: tuple[str, ...] = ()
    variants: Mapping[str, float] = field(default_factory=dict)


def _prf(tp: int, fp: int, fn: int, name: str) -> tuple[float, float, float, list[str]]:
    flags: list[str] = []
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append(f"{name}: precision undefined (no predicted positives), reported 0")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append(f"{name}: recall undefined (no true positives), reported 0")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return precision, recall, f1, flags


def multilabel_report(pred: LabelMatrix, truth: LabelMatrix, verbose: bool = False) -> MetricReport:
    require_aligned(pred, truth)
    if len(pred.ids) == 0:
        raise ValueError("cannot score an empty matrix")
    p = pred.data
    t = truth.data
    rows, tags = p.shape

    both = (p & t).sum(axis=1).astype(float)
    pred_sizes = p.sum(axis=1).astype(float)
    truth_sizes = t.sum(axis=1).astype(float)
    union = pred_sizes + truth_sizes - both

    # `out` pre-filled with the empty-denominator convention values; the
    # divide only overwrites rows with a real denominator.
    row_jaccard = np.divide(both, union, out=np.ones_like(both), where=union > 0)
    row_precision = np.divide(
        both, pred_sizes, out=(truth_sizes == 0).astype(float), where=pred_sizes > 0
    )
    row_recall = np.divide(
        both, truth_sizes, out=(pred_sizes == 0).astype(float), where=truth_sizes > 0
    )

    per_tag: list[TagMetrics] = []
    flags: list[str] = []
    tp_total = fp_total = fn_total = 0
    for index, tag in enumerate(pred.tags):
        tp = int((p[:, index] & t[:, index]).sum())
        fp = int((p[:, index] & ~t[:, index]).sum())
        fn = int((~p[:, index] & t[:, index]).sum())
        tp_total += tp
        fp_total += fp
        fn_total += fn
        precision, recall, f1, tag_flags = _prf(tp, fp, fn, f"tag {tag!r}")
        per_tag.append(TagMetrics(tag, precision, recall, f1, tp + fn, tuple(tag_flags)))
        flags.extend(tag_flags)

    micro_p, micro_r, micro_f1, micro_flags = _prf(tp_total, fp_total, fn_total, "micro")
    flags.extend(micro_flags)

    variants: dict[str, float] = {}
    if verbose:
        variants = {
            "avg_precision_example_based": float(row_precision.mean()),
            "avg_recall_example_based": float(row_recall.mean()),
            "avg_precision_per_tag_mean": float(np.mean([m.precision for m in per_tag])),
            "avg_recall_per_tag_mean": float(np.mean([m.recall for m in per_tag])),
        }

    return MetricReport(
        rows=rows,
        mean_jaccard=float(row_jaccard.mean()),
        avg_precision=float(row_precision.mean()),
        avg_recall=float(row_recall.mean()),
        per_tag=tuple(per_tag),
        macro_precision=float(np.mean([m.precision for m in per_tag])),
        macro_recall=float(np.mean([m.recall for m in per_tag])),
        macro_f1=float(np.mean([m.f1 for m in per_tag])),
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=micro_f1,
        hamming_loss=float((p != t).sum()) / (rows * tags),
        subset_accuracy=float((p == t).all(axis=1).mean()),
        flags=tuple(flags),
        variants=variants,
    )


@dataclass(frozen=True)
class BinaryReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    flags: tuple[str, ...] = ()


def _aligned_pairs(
    pred: Mapping[str, str], truth: Mapping[str, str], allowed: Sequence[str], what: str
) -> list[tuple[str, str]]:
    only_pred = sorted(set(pred) - set(truth))
    only_truth = sorted(set(truth) - set(pred))
    if only_pred or only_truth:
        raise AlignmentError(
            f"{what}: ids differ; only in prediction: {only_pred[:5]}, "
            f"only in truth: {only_truth[:5]}"
        )
    if not pred:
        raise ValueError(f"{what}: nothing to score")
    pairs: list[tuple[str, str]] = []
    for row_id in sorted(pred):
        for side, value in (("prediction", pred[row_id]), ("truth", truth[row_id])):
            if value not in allowed:
                raise ValueError(
                    f"{what}: {side} for {row_id!r} is {value!r}, expected one of {list(allowed)}"
                )
        pairs.append((pred[row_id], truth[row_id]))
    return pairs


def binary_report(pred: Mapping[str, str], truth: Mapping[str, str]) -> BinaryReport:
    """Accuracy/P/R/F1 with "yes" as the positive class, aligned by id."""
    pairs = _aligned_pairs(pred, truth, BINARY_CLASSES, "binary report")
    tp = sum(1 for p, t in pairs if p == "yes" and t == "yes")
    fp = sum(1 for p, t in pairs if p == "yes" and t == "no")
    fn = sum(1 for p, t in pairs if p == "no" and t == "yes")
    tn = sum(1 for p, t in pairs if p == "no" and t == "no")
    precision, recall, f1, flags = _prf(tp, fp, fn, "positive class")
    return BinaryReport(
        accuracy=(tp + tn) / len(pairs),
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class SentimentReport:
    accuracy: float
    per_class: tuple[TagMetrics, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    flags: tuple[str, ...] = ()


def sentiment_report(pred: Mapping[str, str], truth: Mapping[str, str]) -> SentimentReport:
    """Three-class sentiment scoring; macro = unweighted class mean.

    Inputs must already be collapsed to negative/neutral/positive.
    """
    pairs = _aligned_pairs(pred, truth, SENTIMENT_CLASSES, "sentiment report")
    per_class: list[TagMetrics] = []
    flags: list[str] = []
    for cls in SENTIMENT_CLASSES:
        tp = sum(1 for p, t in pairs if p == cls and t == cls)
        fp = sum(1 for p, t in pairs if p == cls and t != cls)
        fn = sum(1 for p, t in pairs if p != cls and t == cls)
        precision, recall, f1, cls_flags = _prf(tp, fp, fn, f"class {cls!r}")
        per_class.append(TagMetrics(cls, precision, recall, f1, tp + fn, tuple(cls_flags)))
        flags.extend(cls_flags)
    return SentimentReport(
        accuracy=sum(1 for p, t in pairs if p == t) / len(pairs),
        per_class=tuple(per_class),
        macro_precision=float(np.mean([m.precision for m in per_class])),
        macro_recall=float(np.mean([m.recall for m in per_class])),
        macro_f1=float(np.mean([m.f1 for m in per_class])),
        flags=tuple(flags),
    )
