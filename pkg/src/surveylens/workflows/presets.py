"""The five shipped workflow presets.

Each preset is an ordered stage list over plain dict rows.  Rows keep a
uniform shape ({"id", "text", "question_text", ...}) so the batching,
derivation, and extraction stages compose across presets; excerpt rows
additionally carry "source_id" for routing back to their comment.
"""

from __future__ import annotations

from typing import Any, Callable, Mapping

from ..corpus import Corpus, SurveyResponse
from ..tasks.primitives import (
    TaskFailure,
    classify_binary,
    classify_multiclass,
    classify_multilabel,
    extract_excerpts,
)
from ..thematic import (
    Batch,
    Theme,
    ThemeSet,
    classify_with_themes,
    coalesce_themes,
    derive_themes_for_batches,
    make_batches,
)
from .runner import (
    Rows,
    Stage,
    StageOutcome,
    WorkflowContext,
    WorkflowRun,
    corpus_rows,
    run_workflow,
)

DEFAULT_IMPROVEMENT_CRITERION = "does this comment contain suggestions for improvement?"
DEFAULT_IMPROVEMENT_GOAL = "suggestions for improvement"
DEFAULT_CONTENT_GAP_GOAL = "suggestions for new content or topics to cover"


def _require_nonempty(corpus: Corpus) -> None:
    if len(corpus) == 0:
        raise ValueError("empty corpus")


def _responses(rows: Rows) -> list[SurveyResponse]:
    return [
        SurveyResponse(
            id=row["id"],
            question_id=row.get("question_id") or "-",
            text=row["text"],
            question_text=row.get("question_text", ""),
        )
        for row in rows
    ]


def _failure_row(failure: TaskFailure) -> dict[str, Any]:
    return {"id": failure.id, "error": failure.message}


# --- shared stage bodies -------------------------------------------------


def _stage_batch(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    items = [(row["id"], row["text"]) for row in rows]
    question_text = {row["id"]: row.get("question_text", "") for row in rows}
    batches = make_batches(items, ctx.context_budget_tokens, ctx.overhead_tokens)
    out: Rows = [
        {
            "batch_id": batch.batch_id,
            "items": [{"id": i, "text": t} for i, t in batch.items],
            "estimated_tokens": batch.estimated_tokens,
            "question_text": question_text[batch.items[0][0]],
        }
        for batch in batches
    ]
    return StageOutcome(rows=out, detail={"batches": len(batches)})


def _stage_derive_themes(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    batches = [
        Batch(
            row["batch_id"],
            tuple((item["id"], item["text"]) for item in row["items"]),
            row["estimated_tokens"],
        )
        for row in rows
    ]
    results = derive_themes_for_batches(
        batches,
        [row["question_text"] for row in rows],
        ctx.gateway,
        model_id=ctx.model_id,
        templates=ctx.templates,
    )
    out: Rows = []
    errors: Rows = []
    for row, result in zip(rows, results):
        if isinstance(result, TaskFailure):
            errors.append(_failure_row(result))
            continue
        out.append(
            {
                "batch_id": row["batch_id"],
                "items": row["items"],
                "question_text": row["question_text"],
                "themes": [{"title": t.title, "description": t.description} for t in result.themes],
            }
        )
    return StageOutcome(rows=out, errors=errors, detail={"failed_batches": len(errors)})


def _stage_classify_with_themes(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    out: Rows = []
    errors: Rows = []
    empty_theme_batches = 0
    for row in rows:
        themes = ThemeSet(
            tuple(Theme(t["title"], t.get("description", "")) for t in row["themes"]),
            (row["batch_id"],),
        )
        if not themes.themes:
            empty_theme_batches += 1
            continue
        result = classify_with_themes(
            [(item["id"], item["text"]) for item in row["items"]],
            themes,
            ctx.gateway,
            question_text=row["question_text"],
            model_id=ctx.model_id,
            templates=ctx.templates,
        )
        errors.extend(_failure_row(f) for f in result.failures)
        out.append(
            {
                "batch_id": row["batch_id"],
                "question_text": row["question_text"],
                "themes": [t.as_row() for t in result.themes.themes],
                "assignments": [[item_id, title] for item_id, title in result.assignments],
            }
        )
    return StageOutcome(
        rows=out, errors=errors, detail={"batches_without_themes": empty_theme_batches}
    )


def _stage_coalesce(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    sets: list[ThemeSet] = []
    for row in rows:
        themes = tuple(
            Theme(
                t["title"],
                t.get("description", ""),
                t.get("count", 0),
                tuple(t.get("merged_from", ())),
            )
            for t in row["themes"]
        )
        if themes:
            sets.append(ThemeSet(themes, (row["batch_id"],)))
    if not sets:
        return StageOutcome(rows=[], counts={}, detail={"merged_sets": 0})
    final = coalesce_themes(
        sets,
        ctx.gateway,
        context_budget_tokens=ctx.context_budget_tokens,
        model_id=ctx.model_id,
        templates=ctx.templates,
    )
    return StageOutcome(
        rows=[t.as_row() for t in final.themes],
        counts={t.title: t.count for t in final.themes},
        detail={"merged_sets": len(sets)},
    )


def _stage_extract(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    # Upstream stages may have attached yes/no answers; only "yes" rows
    # are extraction targets.  Rows without an answer field all qualify.
    pending = [row for row in rows if row.get("answer", "yes") == "yes"]
    results = extract_excerpts(
        _responses(pending),
        ctx.extra["goal"],
        ctx.gateway,
        model_id=ctx.model_id,
        templates=ctx.templates,
    )
    out: Rows = []
    errors: Rows = []
    without_excerpts = 0
    for row, result in zip(pending, results):
        if isinstance(result, TaskFailure):
            errors.append(_failure_row(result))
            continue
        if not result.excerpts:
            without_excerpts += 1
        for index, excerpt in enumerate(result.excerpts):
            out.append(
                {
                    "id": f"{result.id}#{index}",
                    "source_id": result.id,
                    "text": excerpt.text,
                    "span": list(excerpt.char_span) if excerpt.char_span else None,
                    "question_text": row.get("question_text", ""),
                }
            )
    return StageOutcome(
        rows=out,
        errors=errors,
        detail={
            "attempted": len(pending),
            "failed": len(errors),
            "comments_without_excerpts": without_excerpts,
        },
    )


# --- presets --------------------------------------------------------------


def run_bottom_up_themes(
    corpus: Corpus, ctx: WorkflowContext, run_dir, resume: bool = True
) -> WorkflowRun:
    """Batch comments, derive themes per batch, classify, coalesce."""
    _require_nonempty(corpus)
    stages = [
        Stage("batch", _stage_batch),
        Stage("derive-themes", _stage_derive_themes),
        Stage("classify-with-themes", _stage_classify_with_themes),
        Stage("coalesce", _stage_coalesce),
    ]
    return run_workflow("bottom-up-themes", stages, corpus_rows(corpus), ctx, run_dir, resume)


def _stage_multilabel(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    results = classify_multilabel(
        _responses(rows), ctx.tagset, ctx.gateway, model_id=ctx.model_id, templates=ctx.templates
    )
    out: Rows = []
    errors: Rows = []
    counts = {name: 0 for name in ctx.tagset.names}
    for row, result in zip(rows, results):
        if isinstance(result, TaskFailure):
            errors.append(_failure_row(result))
            continue
        labels = ctx.tagset.sort_labels(result.labels)
        out.append({**row, "labels": labels, "reasoning": result.reasoning})
        for label in labels:
            counts[label] += 1
    return StageOutcome(rows=out, errors=errors, counts=counts)


def run_top_down_multilabel(
    corpus: Corpus, ctx: WorkflowContext, run_dir, resume: bool = True
) -> WorkflowRun:
    """Multi-label every comment against the tagset; count tag frequencies."""
    _require_nonempty(corpus)
    stages = [Stage("classify-multilabel", _stage_multilabel)]
    return run_workflow(
        "top-down-multilabel", stages, corpus_rows(corpus), ctx, run_dir, resume
    )


def _stage_binary(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    results = classify_binary(
        _responses(rows),
        ctx.extra["criterion"],
        ctx.gateway,
        model_id=ctx.model_id,
        templates=ctx.templates,
    )
    out: Rows = []
    errors: Rows = []
    yes = 0
    for row, result in zip(rows, results):
        if isinstance(result, TaskFailure):
            errors.append(_failure_row(result))
            continue
        yes += result.answer == "yes"
        out.append({**row, "answer": result.answer})
    return StageOutcome(rows=out, errors=errors, detail={"yes_comments": yes})


def _stage_classify_excerpts(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    results = classify_multiclass(
        _responses(rows), ctx.tagset, ctx.gateway, model_id=ctx.model_id, templates=ctx.templates
    )
    out: Rows = []
    errors: Rows = []
    counts = {name: 0 for name in ctx.tagset.names}
    for row, result in zip(rows, results):
        if isinstance(result, TaskFailure):
            errors.append(_failure_row(result))
            continue
        counts[result.label] += 1
        out.append(
            {
                "id": row["id"],
                "source_id": row["source_id"],
                "text": row["text"],
                "label": result.label,
            }
        )
    return StageOutcome(rows=out, errors=errors, counts=counts)


def run_improvement_suggestions(
    corpus: Corpus, ctx: WorkflowContext, run_dir, resume: bool = True
) -> WorkflowRun:
    """Find comments with improvement suggestions, extract each
    suggestion, and bin the excerpts into the tagset's categories."""
    _require_nonempty(corpus)
    ctx.extra = {
        "criterion": DEFAULT_IMPROVEMENT_CRITERION,
        "goal": DEFAULT_IMPROVEMENT_GOAL,
        **ctx.extra,
    }
    stages = [
        Stage("classify-binary", _stage_binary),
        Stage("extract", _stage_extract),
        Stage("classify-excerpts", _stage_classify_excerpts),
    ]
    return run_workflow(
        "improvement-suggestions", stages, corpus_rows(corpus), ctx, run_dir, resume
    )


def run_content_gaps(
    corpus: Corpus, ctx: WorkflowContext, run_dir, resume: bool = True
) -> WorkflowRun:
    """Extract content/topic suggestions, then theme the excerpts."""
    _require_nonempty(corpus)
    ctx.extra = {"goal": DEFAULT_CONTENT_GAP_GOAL, **ctx.extra}
    stages = [
        Stage("extract", _stage_extract),
        Stage("batch-excerpts", _stage_batch),
        Stage("derive-themes", _stage_derive_themes),
        Stage("classify-with-themes", _stage_classify_with_themes),
        Stage("coalesce", _stage_coalesce),
    ]
    return run_workflow("content-gaps", stages, corpus_rows(corpus), ctx, run_dir, resume)


def _stage_multilabel_or_prior(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    prior = ctx.extra.get("prior_multilabel")
    if prior is None:
        return _stage_multilabel(ctx, rows)
    by_id: Mapping[str, list[str]] = {p["id"]: list(p.get("labels", [])) for p in prior}
    out: Rows = []
    errors: Rows = []
    for row in rows:
        if row["id"] in by_id:
            labels = ctx.tagset.sort_labels(frozenset(by_id[row["id"]]))
            out.append({**row, "labels": labels})
        else:
            errors.append({"id": row["id"], "error": "no prior multilabel result"})
    return StageOutcome(
        rows=out, errors=errors, detail={"source": "prior-results"}, reused=True
    )


def _stage_filter_focus(ctx: WorkflowContext, rows: Rows) -> StageOutcome:
    focus = ctx.extra["focus_tag"]
    kept = [row for row in rows if focus in row.get("labels", [])]
    fraction = len(kept) / len(rows) if rows else 0.0
    return StageOutcome(
        rows=kept,
        counts={focus: len(kept)},
        detail={
            "retained": len(kept),
            "total": len(rows),
            "retained_fraction": round(fraction, 6),
        },
    )


def run_focused_feedback(
    corpus: Corpus, ctx: WorkflowContext, run_dir, resume: bool = True
) -> WorkflowRun:
    """Filter comments carrying one tag (reusing prior multilabel output
    when provided) and extract goal-relevant excerpts from them."""
    _require_nonempty(corpus)
    focus_tag = ctx.extra.get("focus_tag")
    if not focus_tag:
        raise ValueError("focused-feedback needs a focus_tag")
    if focus_tag not in ctx.tagset.names:
        raise ValueError(f"focus_tag {focus_tag!r} is not in the tagset")
    if not ctx.extra.get("goal"):
        raise ValueError("focused-feedback needs a goal")
    stages = [
        Stage("multilabel", _stage_multilabel_or_prior),
        Stage("filter-focus", _stage_filter_focus),
        Stage("extract", _stage_extract),
    ]
    return run_workflow("focused-feedback", stages, corpus_rows(corpus), ctx, run_dir, resume)


PRESETS: dict[str, Callable[..., WorkflowRun]] = {
    "bottom-up-themes": run_bottom_up_themes,
    "top-down-multilabel": run_top_down_multilabel,
    "improvement-suggestions": run_improvement_suggestions,
    "content-gaps": run_content_gaps,
    "focused-feedback": run_focused_feedback,
}


def run_preset(
    name: str, corpus: Corpus, ctx: WorkflowContext, run_dir, resume: bool = True
) -> WorkflowRun:
    if name not in PRESETS:
        raise ValueError(f"unknown workflow preset {name!r}; expected one of {sorted(PRESETS)}")
    return PRESETS[name](corpus, ctx, run_dir, resume)
