"""Classification metrics against hand-worked examples and brute-force oracles."""

from __future__ import annotations

import random

import numpy as np
import pytest

from oracles import brute_binary, brute_multilabel, brute_sentiment, random_multilabel_instance
from surveylens.evaluation.labels import AlignmentError, LabelMatrix, require_aligned
from surveylens.evaluation.metrics import (
    binary_report,
    jaccard,
    mean_rounded,
    multilabel_report,
    round_half_even,
    sentiment_report,
)

TOL = 1e-9


class TestRounding:
    @pytest.mark.parametrize(
        "value,places,expected",
        [
            (0.125, 2, 0.12),
            (0.135, 2, 0.14),
            (2.675, 2, 2.68),
            (81.245, 2, 81.24),
            (0.5, 0, 0.0),
            (1.5, 0, 2.0),
        ],
    )
    def test_half_even_ties(self, value, places, expected):
        assert round_half_even(value, places) == expected

    def test_mean_rounded_is_exact_decimal(self):
        # 0.1 + 0.2 has no exact float representation; the decimal path
        # still averages to exactly 0.15.
        assert mean_rounded([0.1, 0.2]) == 0.15
        assert mean_rounded([81.27, 83.37, 82.35, 80.84, 78.42, 81.18]) == 81.24

    def test_mean_rounded_rejects_empty(self):
        with pytest.raises(ValueError):
            mean_rounded([])


class TestJaccard:
    def test_both_empty_is_full_agreement(self):
        assert jaccard([], []) == 1.0

    def test_disjoint(self):
        assert jaccard(["a"], ["b"]) == 0.0

    def test_overlap(self):
        assert jaccard(["a", "b"], ["b", "c"]) == pytest.approx(1 / 3)

    def test_one_empty(self):
        assert jaccard([], ["a"]) == 0.0


class TestLabelMatrix:
    def test_from_sets_and_round_trip(self):
        matrix = LabelMatrix.from_sets(
            [("r1", {"a", "c"}), ("r2", set())], ["a", "b", "c"]
        )
        assert matrix.ids == ("r1", "r2")
        assert matrix.row_set(0) == frozenset({"a", "c"})
        assert matrix.to_sets() == [("r1", frozenset({"a", "c"})), ("r2", frozenset())]

    def test_from_mapping(self):
        matrix = LabelMatrix.from_sets({"r1": {"a"}}, ["a", "b"])
        assert matrix.ids == ("r1",)

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError, match="zz"):
            LabelMatrix.from_sets([("r1", {"zz"})], ["a"])

    def test_restrict_reorders(self):
        matrix = LabelMatrix.from_sets(
            [("r1", {"a"}), ("r2", {"b"}), ("r3", set())], ["a", "b"]
        )
        sub = matrix.restrict(["r3", "r1"])
        assert sub.ids == ("r3", "r1")
        assert sub.row_set(1) == frozenset({"a"})

    def test_restrict_unknown_id(self):
        matrix = LabelMatrix.from_sets([("r1", {"a"})], ["a"])
        with pytest.raises(AlignmentError):
            matrix.restrict(["r9"])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            LabelMatrix.from_sets([("r1", set()), ("r1", set())], ["a"])

    def test_dtype_enforced(self):
        with pytest.raises(ValueError):
            LabelMatrix(("r1",), ("a",), np.zeros((1, 1), dtype=int))

    def test_require_aligned_diagnostics(self):
        base = LabelMatrix.from_sets([("r1", set()), ("r2", set())], ["a", "b"])
        with pytest.raises(AlignmentError, match="tag order"):
            require_aligned(base, LabelMatrix.from_sets([("r1", set()), ("r2", set())], ["b", "a"]))
        with pytest.raises(AlignmentError, match="only in prediction"):
            require_aligned(base, LabelMatrix.from_sets([("r1", set()), ("r9", set())], ["a", "b"]))
        with pytest.raises(AlignmentError, match="ordered differently"):
            require_aligned(base, LabelMatrix.from_sets([("r2", set()), ("r1", set())], ["a", "b"]))


class TestMultilabelReport:
    def worked_example(self):
        tags = ["a", "b", "c"]
        pred = LabelMatrix.from_sets(
            [("r1", {"a"}), ("r2", set()), ("r3", {"b", "c"})], tags
        )
        truth = LabelMatrix.from_sets(
            [("r1", {"a", "b"}), ("r2", set()), ("r3", {"c"})], tags
        )
        return pred, truth

    def test_hand_worked_values(self):
        pred, truth = self.worked_example()
        report = multilabel_report(pred, truth)
        assert report.rows == 3
        assert report.mean_jaccard == pytest.approx((0.5 + 1.0 + 0.5) / 3, abs=TOL)
        assert report.avg_precision == pytest.approx((1.0 + 1.0 + 0.5) / 3, abs=TOL)
        assert report.avg_recall == pytest.approx((0.5 + 1.0 + 1.0) / 3, abs=TOL)
        by_tag = {m.tag: m for m in report.per_tag}
        assert by_tag["a"].precision == 1.0 and by_tag["a"].recall == 1.0
        assert by_tag["b"].precision == 0.0 and by_tag["b"].recall == 0.0
        assert by_tag["b"].support == 1
        assert report.macro_f1 == pytest.approx(2 / 3, abs=TOL)
        assert report.micro_precision == pytest.approx(2 / 3, abs=TOL)
        assert report.micro_recall == pytest.approx(2 / 3, abs=TOL)
        assert report.hamming_loss == pytest.approx(2 / 9, abs=TOL)
        assert report.subset_accuracy == pytest.approx(1 / 3, abs=TOL)

    def test_degenerate_tags_are_flagged_zeros(self):
        tags = ["seen", "never"]
        pred = LabelMatrix.from_sets([("r1", {"seen"})], tags)
        truth = LabelMatrix.from_sets([("r1", {"seen"})], tags)
        report = multilabel_report(pred, truth)
        never = next(m for m in report.per_tag if m.tag == "never")
        assert never.precision == 0.0 and never.recall == 0.0
        assert any("no predicted positives" in f for f in never.flags)
        assert any("no true positives" in f for f in never.flags)
        assert len(report.per_tag) == 2  # shape is stable despite the degenerate tag
        assert any("never" in f for f in report.flags)

    def test_verbose_variants(self):
        pred, truth = self.worked_example()
        assert multilabel_report(pred, truth).variants == {}
        variants = multilabel_report(pred, truth, verbose=True).variants
        assert set(variants) == {
            "avg_precision_example_based",
            "avg_recall_example_based",
            "avg_precision_per_tag_mean",
            "avg_recall_per_tag_mean",
        }
        assert variants["avg_precision_example_based"] == pytest.approx(5 / 6, abs=TOL)

    def test_empty_matrix_rejected(self):
        empty = LabelMatrix.from_sets([], ["a"])
        with pytest.raises(ValueError):
            multilabel_report(empty, empty)

    def test_matches_brute_force_oracle(self):
        rng = random.Random(2024)
        for _ in range(300):
            pred_sets, truth_sets, tags = random_multilabel_instance(rng)
            pred = LabelMatrix.from_sets(pred_sets, tags)
            truth = LabelMatrix.from_sets(truth_sets, tags)
            report = multilabel_report(pred, truth)
            oracle = brute_multilabel(pred_sets, truth_sets, tags)
            for name in (
                "mean_jaccard", "avg_precision", "avg_recall",
                "macro_precision", "macro_recall", "macro_f1",
                "micro_precision", "micro_recall", "micro_f1",
                "hamming_loss", "subset_accuracy",
            ):
                assert abs(getattr(report, name) - oracle[name]) < TOL, name
            for metric in report.per_tag:
                expected = oracle["per_tag"][metric.tag]
                assert abs(metric.precision - expected["precision"]) < TOL
                assert abs(metric.recall - expected["recall"]) < TOL
                assert abs(metric.f1 - expected["f1"]) < TOL
                assert metric.support == expected["support"]


class TestBinaryReport:
    def test_hand_worked(self):
        pred = {"r1": "yes", "r2": "yes", "r3": "no", "r4": "no"}
        truth = {"r1": "yes", "r2": "no", "r3": "yes", "r4": "no"}
        report = binary_report(pred, truth)
        assert (report.tp, report.fp, report.fn, report.tn) == (1, 1, 1, 1)
        assert report.accuracy == 0.5
        assert report.precision == 0.5
        assert report.recall == 0.5
        assert report.f1 == 0.5

    def test_no_predicted_positives_flagged(self):
        report = binary_report({"r1": "no"}, {"r1": "yes"})
        assert report.precision == 0.0
        assert any("no predicted positives" in f for f in report.flags)

    def test_id_mismatch_rejected(self):
        with pytest.raises(AlignmentError):
            binary_report({"r1": "yes"}, {"r2": "yes"})

    def test_unknown_value_rejected(self):
        with pytest.raises(ValueError, match="maybe"):
            binary_report({"r1": "maybe"}, {"r1": "yes"})

    def test_matches_oracle(self):
        rng = random.Random(77)
        for _ in range(200):
            ids = [f"r{i}" for i in range(rng.randrange(1, 40))]
            pred = {i: rng.choice(("yes", "no")) for i in ids}
            truth = {i: rng.choice(("yes", "no")) for i in ids}
            report = binary_report(pred, truth)
            oracle = brute_binary(pred, truth)
            for name in ("accuracy", "precision", "recall", "f1"):
                assert abs(getattr(report, name) - oracle[name]) < TOL
            assert (report.tp, report.fp, report.fn, report.tn) == (
                oracle["tp"], oracle["fp"], oracle["fn"], oracle["tn"],
            )


class TestSentimentReport:
    def test_hand_worked(self):
        pred = {"r1": "positive", "r2": "negative", "r3": "neutral", "r4": "positive"}
        truth = {"r1": "positive", "r2": "negative", "r3": "positive", "r4": "neutral"}
        report = sentiment_report(pred, truth)
        assert report.accuracy == 0.5
        by_class = {m.tag: m for m in report.per_class}
        assert by_class["positive"].precision == 0.5  # 1 of 2 predicted positives
        assert by_class["positive"].recall == 0.5  # 1 of 2 true positives
        assert by_class["negative"].f1 == 1.0
        assert by_class["neutral"].precision == 0.0

    def test_rejects_uncollapsed_levels(self):
        with pytest.raises(ValueError, match="slightly_positive"):
            sentiment_report({"r1": "slightly_positive"}, {"r1": "positive"})

    def test_matches_oracle(self):
        rng = random.Random(88)
        classes = ("negative", "neutral", "positive")
        for _ in range(200):
            ids = [f"r{i}" for i in range(rng.randrange(1, 40))]
            pred = {i: rng.choice(classes) for i in ids}
            truth = {i: rng.choice(classes) for i in ids}
            report = sentiment_report(pred, truth)
            oracle = brute_sentiment(pred, truth, classes)
            assert abs(report.accuracy - oracle["accuracy"]) < TOL
            for name in ("macro_precision", "macro_recall", "macro_f1"):
                assert abs(getattr(report, name) - oracle[name]) < TOL
            for metric in report.per_class:
                expected = oracle["per_class"][metric.tag]
                assert abs(metric.precision - expected["precision"]) < TOL
                assert abs(metric.recall - expected["recall"]) < TOL
                assert abs(metric.f1 - expected["f1"]) < TOL
                assert metric.support == expected["support"]
