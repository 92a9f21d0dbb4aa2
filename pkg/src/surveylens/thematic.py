"""Two-step inductive thematic analysis.

Step one derives candidate themes from context-window-sized batches of
comments; step two classifies each comment against its batch's themes to
attach counts.  Because every batch derives themes independently, a
final coalescing pass asks the LLM to group equivalent themes — but only
the grouping comes from the model.  Count aggregation is deterministic
code: a merged theme's count is the sum of its members' counts, and the
proposed grouping must be an exact partition of the input themes or it
is rejected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

from .gateway import Gateway, GatewayError, PayloadValidationError, estimate_tokens
from .tasks.primitives import DEFAULT_MODEL_ID, TaskFailure, build_prompt
from .tasks.prompts import TemplateSet, default_templates

logger = logging.getLogger(__name__)

# Separator between set index and title in merge-group member references.
_REF_SEP = "::"


class OversizedItemError(ValueError):
    def __init__(self, item_id: str, tokens: int, capacity: int) -> None:
        super().__init__(
            f"item {item_id!r} is estimated at {tokens} tokens, which exceeds "
            f"the per-batch capacity of {capacity}"
        )
        self.item_id = item_id


@dataclass(frozen=True)
class Theme:
    title: str
    description: str = ""
    count: int = 0
    merged_from: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.title.strip():
            raise ValueError("theme title must be non-empty")
        if self.count < 0:
            raise ValueError(f"theme {self.title!r}: count must be >= 0")

    def as_row(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "description": self.description,
            "count": self.count,
            "merged_from": list(self.merged_from),
        }


@dataclass(frozen=True)
class ThemeSet:
    themes: tuple[Theme, ...]
    source_batch_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        titles = [t.title for t in self.themes]
        if len(set(titles)) != len(titles):
            raise ValueError("theme titles must be unique within a set")

    def __len__(self) -> int:
        return len(self.themes)

    @property
    def titles(self) -> tuple[str, ...]:
        return tuple(t.title for t in self.themes)

    def total_count(self) -> int:
        return sum(t.count for t in self.themes)


@dataclass(frozen=True)
class Batch:
    batch_id: str
    items: tuple[tuple[str, str], ...]  # (id, text)
    estimated_tokens: int


@dataclass(frozen=True)
class ThemeClassification:
    """classify_with_themes output: per-item slots plus updated counts."""

    assignments: tuple[tuple[str, str], ...]  # (item id, theme title)
    themes: ThemeSet
    failures: tuple[TaskFailure, ...]


def make_batches(
    items: Sequence[tuple[str, str]],
    context_budget_tokens: int,
    overhead_tokens: int = 0,
    batch_id_prefix: str = "batch",
) -> list[Batch]:
    """Greedy in-order batching under (budget - overhead) tokens per batch.

    The union of batches is exactly the input, order preserved.  An item
    that alone exceeds the capacity is an error naming the item.
    """
    if context_budget_tokens <= overhead_tokens:
        raise ValueError("context budget must exceed the overhead allowance")
    capacity = context_budget_tokens - overhead_tokens
    batches: list[Batch] = []
    current: list[tuple[str, str]] = []
    current_tokens = 0

    def close() -> None:
        nonlocal current, current_tokens
        if current:
            batches.append(
                Batch(f"{batch_id_prefix}-{len(batches):03d}", tuple(current), current_tokens)
            )
            current = []
            current_tokens = 0

    for item_id, text in items:
        tokens = estimate_tokens(text)
        if tokens > capacity:
            raise OversizedItemError(item_id, tokens, capacity)
        if current and current_tokens + tokens > capacity:
            close()
        current.append((item_id, text))
        current_tokens += tokens
    close()
    return batches


def _comment_block(items: Sequence[tuple[str, str]]) -> str:
    return "\n".join(f"{i}. {text}" for i, (_, text) in enumerate(items, start=1))


def _themes_from_payload(payload: Mapping[str, Any], source_batch_ids: tuple[str, ...]) -> ThemeSet:
    themes: list[Theme] = []
    seen: set[str] = set()
    for item in payload["themes"]:
        title = item["title"].strip()
        if not title:
            raise PayloadValidationError("theme titles must be non-empty")
        if title in seen:
            logger.warning("duplicate theme title %r from model; keeping the first", title)
            continue
        seen.add(title)
        themes.append(Theme(title=title, description=item.get("description", "")))
    return ThemeSet(tuple(themes), source_batch_ids)


def derive_themes(
    batch: Batch,
    question_text: str,
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> ThemeSet:
    """Derive a ThemeSet from one batch; counts start at 0."""
    if not batch.items:
        raise ValueError(f"batch {batch.batch_id!r} is empty")
    bundle = build_prompt(
        "derive_themes",
        _comment_block(batch.items),
        question_text,
        model_id=model_id,
        temperature=temperature,
        templates=templates or default_templates(),
    )
    outcome = gateway.complete_structured(bundle)
    return _themes_from_payload(outcome.payload, (batch.batch_id,))


def derive_themes_for_batches(
    batches: Sequence[Batch],
    question_text: str | Sequence[str],
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> list[ThemeSet | TaskFailure]:
    """Parallel derive_themes; per-batch failures come back in-slot.

    question_text may be one string for all batches or one per batch.
    """
    templates = templates or default_templates()
    if isinstance(question_text, str):
        texts = [question_text] * len(batches)
    else:
        texts = list(question_text)
        if len(texts) != len(batches):
            raise ValueError("need one question text per batch")
    bundles = [
        build_prompt(
            "derive_themes",
            _comment_block(batch.items),
            text,
            model_id=model_id,
            temperature=temperature,
            templates=templates,
        )
        for batch, text in zip(batches, texts)
    ]
    results: list[ThemeSet | TaskFailure] = []
    for batch, outcome in zip(batches, gateway.run_parallel(bundles)):
        if isinstance(outcome, GatewayError):
            results.append(TaskFailure(batch.batch_id, "derive_themes", str(outcome)))
        else:
            results.append(_themes_from_payload(outcome.payload, (batch.batch_id,)))
    return results


def classify_with_themes(
    items: Sequence[tuple[str, str]],
    themes: ThemeSet,
    gateway: Gateway,
    *,
    question_text: str = "",
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> ThemeClassification:
    """Multiclass each item over the theme titles and tally counts.

    Theme counts in the returned set equal the number of items assigned
    to them, so counts always sum to the number of classified items.
    """
    if not themes.themes:
        raise ValueError("cannot classify against an empty theme set")
    templates = templates or default_templates()
    options = tuple((t.title, t.description) for t in themes.themes)
    bundles = [
        build_prompt(
            "multiclass",
            text,
            question_text,
            options=options,
            model_id=model_id,
            temperature=temperature,
            templates=templates,
        )
        for _, text in items
    ]
    tally = {t.title: 0 for t in themes.themes}
    assignments: list[tuple[str, str]] = []
    task_failures: list[TaskFailure] = []
    for (item_id, _), outcome in zip(items, gateway.run_parallel(bundles)):
        if isinstance(outcome, GatewayError):
            task_failures.append(TaskFailure(item_id, "multiclass", str(outcome)))
            continue
        title = outcome.payload["label"]
        assignments.append((item_id, title))
        tally[title] += 1
    updated = ThemeSet(
        tuple(replace(t, count=tally[t.title]) for t in themes.themes),
        themes.source_batch_ids,
    )
    return ThemeClassification(tuple(assignments), updated, tuple(task_failures))


def theme_ref(set_index: int, title: str) -> str:
    return f"{set_index}{_REF_SEP}{title}"


def _theme_block(sets: Sequence[ThemeSet]) -> str:
    lines: list[str] = []
    for index, theme_set in enumerate(sets):
        for theme in theme_set.themes:
            ref = theme_ref(index, theme.title)
            desc = f" — {theme.description}" if theme.description else ""
            lines.append(f"- [{ref}] {theme.title}{desc} (count {theme.count})")
    return "\n".join(lines)


def apply_merge_groups(
    sets: Sequence[ThemeSet], groups: Sequence[Mapping[str, Any]]
) -> ThemeSet:
    """Deterministically aggregate a validated merge grouping.

    Each group is {"title", "description", "members": [ref, ...]} where a
    ref is "<set index>::<title>".  The groups must partition the input
    themes exactly; counts are summed per group.
    """
    by_ref: dict[str, Theme] = {}
    for index, theme_set in enumerate(sets):
        for theme in theme_set.themes:
            by_ref[theme_ref(index, theme.title)] = theme

    seen: set[str] = set()
    titles: set[str] = set()
    merged: list[Theme] = []
    for group in groups:
        title = group["title"].strip()
        if not title:
            raise PayloadValidationError("merged theme titles must be non-empty")
        if title in titles:
            raise PayloadValidationError(f"duplicate merged theme title {title!r}")
        titles.add(title)
        members = group["members"]
        if not members:
            raise PayloadValidationError(f"merged theme {title!r} has no members")
        count = 0
        for ref in members:
            if ref not in by_ref:
                raise PayloadValidationError(f"unknown theme reference {ref!r}")
            if ref in seen:
                raise PayloadValidationError(f"theme reference {ref!r} appears in two groups")
            seen.add(ref)
            count += by_ref[ref].count
        merged.append(
            Theme(
                title=title,
                description=group.get("description", ""),
                count=count,
                merged_from=tuple(members),
            )
        )
    missing = set(by_ref) - seen
    if missing:
        raise PayloadValidationError(
            f"merge groups must cover every theme; missing {sorted(missing)[:5]}"
        )
    batch_ids: list[str] = []
    for theme_set in sets:
        for batch_id in theme_set.source_batch_ids:
            if batch_id not in batch_ids:
                batch_ids.append(batch_id)
    return ThemeSet(tuple(merged), tuple(batch_ids))


def _coalesce_once(
    sets: Sequence[ThemeSet],
    gateway: Gateway,
    model_id: str,
    temperature: float,
    templates: TemplateSet,
) -> ThemeSet:
    bundle = build_prompt(
        "coalesce_themes",
        "",
        labels_block=_theme_block(sets),
        model_id=model_id,
        temperature=temperature,
        templates=templates,
    )

    def check_partition(payload: dict[str, Any]) -> None:
        apply_merge_groups(sets, payload["groups"])

    outcome = gateway.complete_structured(bundle, validate=check_partition)
    return apply_merge_groups(sets, outcome.payload["groups"])


def coalesce_themes(
    sets: Sequence[ThemeSet],
    gateway: Gateway,
    *,
    context_budget_tokens: int | None = None,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> ThemeSet:
    """Merge equivalent themes across sets; counts are conserved.

    When the rendered theme listing would blow the context budget, sets
    are coalesced hierarchically in budget-sized groups and the results
    coalesced again.
    """
    sets = [s for s in sets if s.themes]
    if not sets:
        raise ValueError("coalesce needs at least one non-empty theme set")
    templates = templates or default_templates()

    if context_budget_tokens is not None:
        groups: list[list[ThemeSet]] = []
        current: list[ThemeSet] = []
        current_tokens = 0
        for theme_set in sets:
            tokens = estimate_tokens(_theme_block([theme_set]))
            if current and current_tokens + tokens > context_budget_tokens:
                groups.append(current)
                current = []
                current_tokens = 0
            current.append(theme_set)
            current_tokens += tokens
        if current:
            groups.append(current)
        # No reduction possible (every set alone busts the budget):
        # fall through to a single flat call rather than recurse forever.
        if 1 < len(groups) < len(sets):
            partials = [
                _coalesce_once(group, gateway, model_id, temperature, templates)
                for group in groups
            ]
            return coalesce_themes(
                partials,
                gateway,
                context_budget_tokens=context_budget_tokens,
                model_id=model_id,
                temperature=temperature,
                templates=templates,
            )

    return _coalesce_once(sets, gateway, model_id, temperature, templates)
