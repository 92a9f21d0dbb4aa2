"""Thematic analysis: batching, theme derivation, counting, merging."""

from __future__ import annotations

import random

import pytest

from conftest import coalesce_args, keyed, make_gateway, multiclass_args, positional, themes_args
from surveylens.gateway import PayloadValidationError, estimate_tokens
from surveylens.tasks.primitives import TaskFailure
from surveylens.thematic import (
    Batch,
    OversizedItemError,
    Theme,
    ThemeSet,
    apply_merge_groups,
    classify_with_themes,
    coalesce_themes,
    derive_themes,
    derive_themes_for_batches,
    make_batches,
    theme_ref,
    _theme_block,
)

QUESTION = "What can we do to improve this course?"


def items_of(*texts: str) -> list[tuple[str, str]]:
    return [(f"r{i}", text) for i, text in enumerate(texts, start=1)]


class TestMakeBatches:
    def test_greedy_fill_under_capacity(self):
        # Ten 100-token items into 450-token batches (500 budget, 50
        # overhead): four, four, two.
        items = [(f"r{i}", "x" * 400) for i in range(10)]
        batches = make_batches(items, 500, overhead_tokens=50)
        assert [len(b.items) for b in batches] == [4, 4, 2]
        assert [b.estimated_tokens for b in batches] == [400, 400, 200]
        assert [b.batch_id for b in batches] == ["batch-000", "batch-001", "batch-002"]

    def test_union_is_input_in_order(self):
        rng = random.Random(7)
        for _ in range(50):
            items = [
                (f"r{i}", "y" * rng.randrange(1, 300)) for i in range(rng.randrange(1, 40))
            ]
            budget = rng.randrange(100, 400)
            batches = make_batches(items, budget)
            flattened = [item for b in batches for item in b.items]
            assert flattened == items
            for batch in batches:
                assert sum(estimate_tokens(t) for _, t in batch.items) <= budget

    def test_oversized_item_is_an_error(self):
        with pytest.raises(OversizedItemError, match="r2"):
            make_batches([("r1", "ok"), ("r2", "z" * 1000)], 100)

    def test_budget_must_exceed_overhead(self):
        with pytest.raises(ValueError):
            make_batches([("r1", "ok")], 100, overhead_tokens=100)

    def test_empty_input_gives_no_batches(self):
        assert make_batches([], 100) == []


class TestDeriveThemes:
    def test_single_batch(self):
        batch = Batch("batch-000", (("r1", "More quizzes please."), ("r2", "Loved the videos.")), 12)
        gateway, provider, _ = make_gateway([
            keyed("More quizzes", themes_args([
                ("Assessment volume", "Requests for more quizzes"),
                ("Video praise", "Positive remarks about videos"),
            ])),
        ])
        themes = derive_themes(batch, QUESTION, gateway)
        assert themes.titles == ("Assessment volume", "Video praise")
        assert all(t.count == 0 for t in themes.themes)
        assert themes.source_batch_ids == ("batch-000",)
        # Comments are numbered in the prompt and the question is quoted.
        sent = provider.requests[0].user_text
        assert "1. More quizzes please." in sent
        assert "2. Loved the videos." in sent
        assert QUESTION in sent

    def test_duplicate_titles_keep_first(self):
        batch = Batch("batch-000", (("r1", "text"),), 1)
        gateway, _, _ = make_gateway([
            keyed("text", themes_args([("Pace", "first"), ("Pace", "second")])),
        ])
        themes = derive_themes(batch, QUESTION, gateway)
        assert themes.titles == ("Pace",)
        assert themes.themes[0].description == "first"

    def test_empty_batch_rejected(self):
        gateway, _, _ = make_gateway([])
        with pytest.raises(ValueError):
            derive_themes(Batch("batch-000", (), 0), QUESTION, gateway)

    def test_parallel_batches_with_in_slot_failure(self):
        batches = [
            Batch("batch-000", (("r1", "alpha text"),), 3),
            Batch("batch-001", (("r2", "beta text"),), 3),
        ]
        gateway, _, _ = make_gateway(
            [
                keyed("alpha text", themes_args([("A", "a")])),
                keyed("beta text", None, status=500),
            ],
            retry_max_attempts=1,
        )
        first, second = derive_themes_for_batches(batches, QUESTION, gateway)
        assert isinstance(first, ThemeSet) and first.titles == ("A",)
        assert isinstance(second, TaskFailure) and second.id == "batch-001"

    def test_question_list_must_match_batches(self):
        gateway, _, _ = make_gateway([])
        with pytest.raises(ValueError):
            derive_themes_for_batches(
                [Batch("batch-000", (("r1", "t"),), 1)], ["q1", "q2"], gateway
            )


class TestClassifyWithThemes:
    def themes(self):
        return ThemeSet((Theme("Pace", "speed"), Theme("Depth", "detail")), ("batch-000",))

    def test_counts_sum_to_classified_items(self):
        gateway, _, _ = make_gateway([
            keyed("too fast", multiclass_args("Pace")),
            keyed("too shallow", multiclass_args("Depth")),
            keyed("rushed", multiclass_args("Pace")),
        ])
        result = classify_with_themes(
            items_of("too fast", "too shallow", "rushed"), self.themes(), gateway
        )
        assert result.assignments == (("r1", "Pace"), ("r2", "Depth"), ("r3", "Pace"))
        assert {t.title: t.count for t in result.themes.themes} == {"Pace": 2, "Depth": 1}
        assert result.themes.total_count() == 3
        assert result.failures == ()

    def test_failed_items_are_not_counted(self):
        gateway, _, _ = make_gateway(
            [
                keyed("too fast", multiclass_args("Pace")),
                keyed("broken", None, status=500),
            ],
            retry_max_attempts=1,
        )
        result = classify_with_themes(items_of("too fast", "broken"), self.themes(), gateway)
        assert result.themes.total_count() == 1
        assert len(result.failures) == 1 and result.failures[0].id == "r2"

    def test_empty_theme_set_rejected(self):
        gateway, _, _ = make_gateway([])
        with pytest.raises(ValueError):
            classify_with_themes(items_of("x"), ThemeSet(()), gateway)


class TestApplyMergeGroups:
    def sets(self):
        return [
            ThemeSet((Theme("alpha", count=2), Theme("beta", count=3)), ("batch-000",)),
            ThemeSet((Theme("gamma", count=5),), ("batch-001",)),
        ]

    def test_counts_sum_per_group(self):
        merged = apply_merge_groups(
            self.sets(),
            [
                {"title": "speed", "description": "d", "members": ["0::alpha", "1::gamma"]},
                {"title": "depth", "description": "", "members": ["0::beta"]},
            ],
        )
        assert {t.title: t.count for t in merged.themes} == {"speed": 7, "depth": 3}
        assert merged.themes[0].merged_from == ("0::alpha", "1::gamma")
        assert merged.source_batch_ids == ("batch-000", "batch-001")
        assert merged.total_count() == sum(s.total_count() for s in self.sets())

    @pytest.mark.parametrize(
        "groups,fragment",
        [
            ([{"title": "t", "members": ["0::alpha", "0::beta", "9::zz"]}], "unknown"),
            (
                [
                    {"title": "a", "members": ["0::alpha", "1::gamma"]},
                    {"title": "b", "members": ["0::beta", "0::alpha"]},
                ],
                "two groups",
            ),
            ([{"title": "t", "members": ["0::alpha"]}], "missing"),
            (
                [
                    {"title": "t", "members": []},
                    {"title": "u", "members": ["0::alpha", "0::beta", "1::gamma"]},
                ],
                "no members",
            ),
            (
                [
                    {"title": "t", "members": ["0::alpha"]},
                    {"title": "t", "members": ["0::beta", "1::gamma"]},
                ],
                "duplicate",
            ),
            ([{"title": "  ", "members": ["0::alpha", "0::beta", "1::gamma"]}], "non-empty"),
        ],
    )
    def test_partition_violations_rejected(self, groups, fragment):
        with pytest.raises(PayloadValidationError, match=fragment):
            apply_merge_groups(self.sets(), groups)

    def test_random_partitions_conserve_counts(self):
        rng = random.Random(55)
        for _ in range(100):
            n_sets = rng.randrange(1, 4)
            sets = []
            refs = []
            for s in range(n_sets):
                themes = tuple(
                    Theme(f"t{s}_{i}", count=rng.randrange(0, 20))
                    for i in range(rng.randrange(1, 6))
                )
                sets.append(ThemeSet(themes, (f"batch-{s:03d}",)))
                refs.extend(theme_ref(s, t.title) for t in themes)
            rng.shuffle(refs)
            n_groups = rng.randrange(1, len(refs) + 1)
            buckets = [[] for _ in range(n_groups)]
            for i, ref in enumerate(refs):
                buckets[i % n_groups].append(ref)
            groups = [
                {"title": f"g{i}", "members": bucket}
                for i, bucket in enumerate(buckets) if bucket
            ]
            merged = apply_merge_groups(sets, groups)
            assert merged.total_count() == sum(s.total_count() for s in sets)


class TestCoalesceThemes:
    def test_flat_merge_conserves_counts(self):
        sets = [
            ThemeSet((Theme("alpha", count=2), Theme("beta", count=3)), ("batch-000",)),
            ThemeSet((Theme("gamma", count=5),), ("batch-001",)),
        ]
        gateway, provider, _ = make_gateway([
            keyed("0::alpha", coalesce_args([
                ("speed", ["0::alpha", "1::gamma"]),
                ("depth", ["0::beta"]),
            ])),
        ])
        merged = coalesce_themes(sets, gateway)
        assert merged.total_count() == 10
        assert len(provider.requests) == 1
        # The prompt lists every theme with its reference key and count.
        sent = provider.requests[0].user_text
        assert "[0::alpha]" in sent and "(count 2)" in sent

    def test_bad_grouping_triggers_repair(self):
        sets = [ThemeSet((Theme("alpha", count=1), Theme("beta", count=2)), ("batch-000",))]
        gateway, provider, _ = make_gateway([
            positional(coalesce_args([("only alpha", ["0::alpha"])])),
            positional(coalesce_args([("both", ["0::alpha", "0::beta"])])),
        ])
        merged = coalesce_themes(sets, gateway)
        assert merged.titles == ("both",)
        assert merged.total_count() == 3
        assert "missing" in provider.requests[1].user_text

    def test_empty_sets_rejected(self):
        gateway, _, _ = make_gateway([])
        with pytest.raises(ValueError):
            coalesce_themes([ThemeSet(())], gateway)

    def test_hierarchical_merge_under_budget(self):
        s0 = ThemeSet((Theme("alpha", count=2), Theme("beta", count=3)), ("batch-000",))
        s1 = ThemeSet((Theme("gamma", count=5),), ("batch-001",))
        s2 = ThemeSet((Theme("delta", count=7),), ("batch-002",))
        budget = estimate_tokens(_theme_block([s0])) + estimate_tokens(_theme_block([s1]))
        gateway, provider, _ = make_gateway([
            keyed("0::alpha", coalesce_args([
                ("speed", ["0::alpha", "1::gamma"]),
                ("depth", ["0::beta"]),
            ])),
            keyed("0::delta", coalesce_args([("pace", ["0::delta"])])),
            keyed("1::pace", coalesce_args([
                ("speed or pace", ["0::speed", "1::pace"]),
                ("depth", ["0::depth"]),
            ])),
        ])
        merged = coalesce_themes([s0, s1, s2], gateway, context_budget_tokens=budget)
        assert len(provider.requests) == 3
        assert {t.title: t.count for t in merged.themes} == {"speed or pace": 14, "depth": 3}
        assert merged.total_count() == 17

    def test_no_reduction_falls_back_to_flat_call(self):
        # When every set alone busts the budget, grouping cannot shrink
        # the problem, so a single flat call happens instead of looping.
        sets = [
            ThemeSet((Theme("alpha", count=1),), ("batch-000",)),
            ThemeSet((Theme("beta", count=2),), ("batch-001",)),
        ]
        gateway, provider, _ = make_gateway([
            keyed("0::alpha", coalesce_args([("all", ["0::alpha", "1::beta"])])),
        ])
        merged = coalesce_themes(sets, gateway, context_budget_tokens=1)
        assert len(provider.requests) == 1
        assert merged.total_count() == 3
