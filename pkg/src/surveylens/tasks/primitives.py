"""LLM task primitives: binary/multi-label/multi-class classification,
excerpt extraction, and sentiment rating.

Every operation is pure composition: build one prompt bundle per input,
hand the batch to the gateway, map validated payloads onto typed
results.  Per-item gateway failures come back in-slot as TaskFailure so
|inputs| == |results| always holds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

from .. import textnorm
from ..corpus import SurveyResponse
from ..gateway import (
    FieldSpec,
    Gateway,
    GatewayError,
    KIND_ENUM,
    KIND_OBJECT_LIST,
    KIND_STRING_LIST,
    OutputSchema,
    PayloadValidationError,
    PromptBundle,
    TaskOutcome,
    TokenUsage,
    with_reasoning,
)
from .prompts import TASK_KINDS, TemplateSet, default_templates
from .tags import TagSet

SENTIMENT_LEVELS = ("negative", "slightly_negative", "neutral", "slightly_positive", "positive")
SENTIMENT_CLASSES = ("negative", "neutral", "positive")

_COLLAPSE = {
    "negative": "negative",
    "slightly_negative": "negative",
    "neutral": "neutral",
    "slightly_positive": "positive",
    "positive": "positive",
}

# Rubric categories for judging extraction quality; one yes/no field per
# category, "yes" marking a failure.
RUBRIC_CATEGORIES = (
    "missed_excerpts",
    "ambiguous_excerpts",
    "missed_existing_context",
    "irrelevant_excerpts",
    "irrelevant_context",
    "implied_goal_focus",
    "non_quotes",
    "non_contiguous_excerpts",
    "redundant_excerpts",
)

DEFAULT_MODEL_ID = "gpt-4"


@dataclass(frozen=True)
class TaskFailure:
    """A per-item failure slot; keeps batches aligned with their inputs."""

    id: str
    task_kind: str
    message: str

    def as_row(self) -> dict[str, Any]:
        return {"id": self.id, "task_kind": self.task_kind, "error": self.message}


@dataclass(frozen=True)
class BinaryResult:
    id: str
    answer: str  # "yes" | "no"
    reasoning: str
    model_id: str
    usage: TokenUsage

    def as_row(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "answer": self.answer,
            "reasoning": self.reasoning,
            "model_id": self.model_id,
            "prompt_tokens": self.usage.prompt_tokens,
            "completion_tokens": self.usage.completion_tokens,
        }


@dataclass(frozen=True)
class MultiLabelResult:
    id: str
    labels: frozenset[str]
    reasoning: str
    model_id: str
    usage: TokenUsage

    def as_row(self, tagset: TagSet | None = None) -> dict[str, Any]:
        ordered = tagset.sort_labels(self.labels) if tagset else sorted(self.labels)
        return {
            "id": self.id,
            "labels": ordered,
            "reasoning": self.reasoning,
            "model_id": self.model_id,
            "prompt_tokens": self.usage.prompt_tokens,
            "completion_tokens": self.usage.completion_tokens,
        }


@dataclass(frozen=True)
class MultiClassResult:
    id: str
    label: str
    reasoning: str
    model_id: str
    usage: TokenUsage

    def as_row(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "label": self.label,
            "reasoning": self.reasoning,
            "model_id": self.model_id,
            "prompt_tokens": self.usage.prompt_tokens,
            "completion_tokens": self.usage.completion_tokens,
        }


@dataclass(frozen=True)
class Excerpt:
    response_id: str
    text: str
    # Character span into the source text, found by punctuation- and
    # case-insensitive matching; None when the excerpt is not verbatim.
    char_span: tuple[int, int] | None = None

    def as_row(self) -> dict[str, Any]:
        return {
            "id": self.response_id,
            "excerpt": self.text,
            "span": list(self.char_span) if self.char_span else None,
        }


@dataclass(frozen=True)
class ExtractionResult:
    id: str
    excerpts: tuple[Excerpt, ...]
    reasoning: str
    model_id: str
    usage: TokenUsage

    def as_row(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "excerpts": [e.as_row() for e in self.excerpts],
            "reasoning": self.reasoning,
            "model_id": self.model_id,
            "prompt_tokens": self.usage.prompt_tokens,
            "completion_tokens": self.usage.completion_tokens,
        }


@dataclass(frozen=True)
class SentimentResult:
    id: str
    level: str  # five-level
    label: str  # collapsed three-class
    reasoning: str
    model_id: str
    usage: TokenUsage

    def as_row(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "level": self.level,
            "label": self.label,
            "reasoning": self.reasoning,
            "model_id": self.model_id,
            "prompt_tokens": self.usage.prompt_tokens,
            "completion_tokens": self.usage.completion_tokens,
        }


def collapse_sentiment(level: str) -> str:
    """Fold the five-level scale onto negative/neutral/positive."""
    if level not in _COLLAPSE:
        raise ValueError(f"unknown sentiment level {level!r}")
    return _COLLAPSE[level]


def binary_schema() -> OutputSchema:
    return with_reasoning(
        "record_binary_answer",
        FieldSpec("answer", KIND_ENUM, values=("yes", "no")),
        description="Record the reasoning and the yes/no answer.",
    )


def multilabel_schema(tag_names: Sequence[str]) -> OutputSchema:
    return with_reasoning(
        "record_labels",
        FieldSpec("labels", KIND_STRING_LIST, values=tuple(tag_names)),
        description="Record the reasoning and every applicable label.",
    )


def multiclass_schema(option_names: Sequence[str]) -> OutputSchema:
    return with_reasoning(
        "record_label",
        FieldSpec("label", KIND_ENUM, values=tuple(option_names)),
        description="Record the reasoning and the single best label.",
    )


def sentiment_schema() -> OutputSchema:
    return with_reasoning(
        "record_sentiment",
        FieldSpec("sentiment", KIND_ENUM, values=SENTIMENT_LEVELS),
        description="Record the reasoning and the sentiment level.",
    )


def extraction_schema() -> OutputSchema:
    return with_reasoning(
        "record_excerpts",
        FieldSpec("excerpts", KIND_STRING_LIST),
        description="Record the reasoning and the verbatim excerpts.",
    )


def derive_themes_schema() -> OutputSchema:
    return with_reasoning(
        "record_themes",
        FieldSpec(
            "themes",
            KIND_OBJECT_LIST,
            item_fields=(FieldSpec("title"), FieldSpec("description")),
        ),
        description="Record the reasoning and the derived themes.",
    )


def coalesce_schema() -> OutputSchema:
    return with_reasoning(
        "record_merged_themes",
        FieldSpec(
            "groups",
            KIND_OBJECT_LIST,
            item_fields=(
                FieldSpec("title"),
                FieldSpec("description"),
                FieldSpec("members", KIND_STRING_LIST),
            ),
        ),
        description="Record the reasoning and the merged theme groups.",
    )


def judge_schema() -> OutputSchema:
    fields = tuple(
        FieldSpec(category, KIND_ENUM, values=("yes", "no")) for category in RUBRIC_CATEGORIES
    )
    return with_reasoning(
        "record_rubric_verdict",
        *fields,
        description="Record the reasoning and a yes/no verdict per rubric question.",
    )


def build_prompt(
    task_kind: str,
    comment: str,
    question_text: str = "",
    *,
    tagset: TagSet | None = None,
    options: Sequence[tuple[str, str]] | None = None,
    goal: str | None = None,
    criterion: str | None = None,
    labels_block: str | None = None,
    excerpts_block: str | None = None,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> PromptBundle:
    """Assemble the prompt bundle for one task instance.

    The user text follows a fixed shape: instruction with a step-by-step
    directive, label/theme context when applicable, the originating
    survey question, then the comment(s).
    """
    if task_kind not in TASK_KINDS:
        raise ValueError(f"unknown task kind {task_kind!r}")
    templates = templates or default_templates()
    values: dict[str, str] = {"comment": comment, "question": question_text}

    if task_kind == "binary":
        if not criterion or not criterion.strip():
            raise ValueError("binary classification needs a non-empty criterion")
        schema = binary_schema()
        values["criterion"] = criterion
    elif task_kind == "multilabel":
        if tagset is None:
            raise ValueError("multilabel classification needs a tagset")
        schema = multilabel_schema(tagset.names)
        values["labels"] = tagset.describe_lines()
    elif task_kind == "multiclass":
        pairs = options if options is not None else (
            tuple((t.name, t.description) for t in tagset.tags) if tagset else None
        )
        if not pairs:
            raise ValueError("multiclass classification needs options or a tagset")
        schema = multiclass_schema(tuple(name for name, _ in pairs))
        values["labels"] = "\n".join(f"- {name}: {desc}" for name, desc in pairs)
    elif task_kind == "sentiment":
        schema = sentiment_schema()
    elif task_kind == "extract":
        if not goal or not goal.strip():
            raise ValueError("extraction needs a non-empty goal")
        schema = extraction_schema()
        values["goal"] = goal
    elif task_kind == "derive_themes":
        schema = derive_themes_schema()
    elif task_kind == "coalesce_themes":
        if labels_block is None:
            raise ValueError("theme coalescing needs the rendered theme block")
        schema = coalesce_schema()
        values["labels"] = labels_block
    else:  # judge_extraction
        if not goal or excerpts_block is None:
            raise ValueError("extraction judging needs a goal and the excerpts block")
        schema = judge_schema()
        values["goal"] = goal
        values["excerpts"] = excerpts_block

    return PromptBundle(
        system_text=templates.render("system", {}),
        user_text=templates.render(task_kind, values),
        schema=schema,
        model_id=model_id,
        temperature=temperature,
        task_kind=task_kind,
    )


def _run_per_response(
    responses: Iterable[SurveyResponse],
    gateway: Gateway,
    task_kind: str,
    make_bundle: Callable[[SurveyResponse], PromptBundle],
    make_result: Callable[[SurveyResponse, TaskOutcome], Any],
    validate: Callable[[dict[str, Any]], None] | None = None,
) -> list[Any]:
    responses = list(responses)
    bundles = [make_bundle(r) for r in responses]
    raw = gateway.run_parallel(bundles, validate=validate)
    results: list[Any] = []
    for response, outcome in zip(responses, raw):
        if isinstance(outcome, GatewayError):
            results.append(TaskFailure(response.id, task_kind, str(outcome)))
        else:
            results.append(make_result(response, outcome))
    return results


def classify_binary(
    responses: Iterable[SurveyResponse],
    criterion: str,
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> list[BinaryResult | TaskFailure]:
    templates = templates or default_templates()
    return _run_per_response(
        responses,
        gateway,
        "binary",
        lambda r: build_prompt(
            "binary", r.text, r.question_text, criterion=criterion,
            model_id=model_id, temperature=temperature, templates=templates,
        ),
        lambda r, o: BinaryResult(r.id, o.payload["answer"], o.reasoning, o.model_id, o.usage),
    )


def classify_multilabel(
    responses: Iterable[SurveyResponse],
    tagset: TagSet,
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> list[MultiLabelResult | TaskFailure]:
    """Assign a subset of the tagset to each response.

    Duplicate labels in the raw payload are de-duplicated.  When the
    tagset declares a catch-all, an empty label set is rejected (the
    model should have used the catch-all), triggering the gateway's
    repair re-ask.
    """
    templates = templates or default_templates()

    def check_not_empty(payload: dict[str, Any]) -> None:
        if tagset.catch_all is not None and not payload.get("labels"):
            raise PayloadValidationError(
                f"labels may not be empty; use the catch-all {tagset.catch_all!r} "
                "when nothing else fits"
            )

    return _run_per_response(
        responses,
        gateway,
        "multilabel",
        lambda r: build_prompt(
            "multilabel", r.text, r.question_text, tagset=tagset,
            model_id=model_id, temperature=temperature, templates=templates,
        ),
        lambda r, o: MultiLabelResult(
            r.id, frozenset(o.payload["labels"]), o.reasoning, o.model_id, o.usage
        ),
        validate=check_not_empty,
    )


def classify_multiclass(
    responses: Iterable[SurveyResponse],
    options: Sequence[tuple[str, str]] | TagSet,
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> list[MultiClassResult | TaskFailure]:
    """Assign exactly one option (name, description pairs) per response."""
    if isinstance(options, TagSet):
        options = tuple((t.name, t.description) for t in options.tags)
    else:
        options = tuple(options)
    if not options:
        raise ValueError("multiclass classification needs at least one option")
    templates = templates or default_templates()
    return _run_per_response(
        responses,
        gateway,
        "multiclass",
        lambda r: build_prompt(
            "multiclass", r.text, r.question_text, options=options,
            model_id=model_id, temperature=temperature, templates=templates,
        ),
        lambda r, o: MultiClassResult(r.id, o.payload["label"], o.reasoning, o.model_id, o.usage),
    )


def extract_excerpts(
    responses: Iterable[SurveyResponse],
    goal: str,
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> list[ExtractionResult | TaskFailure]:
    """Pull verbatim excerpts relevant to `goal` out of each response.

    Each excerpt gets a character span into its source found by
    normalized matching; excerpts the model edited too much to locate
    keep span None (fidelity checking decides how bad they are).
    """
    templates = templates or default_templates()

    def make_result(r: SurveyResponse, o: TaskOutcome) -> ExtractionResult:
        excerpts = tuple(
            Excerpt(r.id, text, textnorm.locate(text, r.text))
            for text in o.payload["excerpts"]
        )
        return ExtractionResult(r.id, excerpts, o.reasoning, o.model_id, o.usage)

    return _run_per_response(
        responses,
        gateway,
        "extract",
        lambda r: build_prompt(
            "extract", r.text, r.question_text, goal=goal,
            model_id=model_id, temperature=temperature, templates=templates,
        ),
        make_result,
    )


def flatten_excerpts(results: Iterable[ExtractionResult | TaskFailure]) -> list[Excerpt]:
    """All excerpts from successful slots, input order preserved."""
    out: list[Excerpt] = []
    for result in results:
        if isinstance(result, ExtractionResult):
            out.extend(result.excerpts)
    return out


def rate_sentiment(
    responses: Iterable[SurveyResponse],
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> list[SentimentResult | TaskFailure]:
    """Five-level sentiment per response, with the collapsed class attached."""
    templates = templates or default_templates()
    return _run_per_response(
        responses,
        gateway,
        "sentiment",
        lambda r: build_prompt(
            "sentiment", r.text, r.question_text,
            model_id=model_id, temperature=temperature, templates=templates,
        ),
        lambda r, o: SentimentResult(
            r.id,
            o.payload["sentiment"],
            collapse_sentiment(o.payload["sentiment"]),
            o.reasoning,
            o.model_id,
            o.usage,
        ),
    )


def failures(results: Iterable[Any]) -> list[TaskFailure]:
    return [r for r in results if isinstance(r, TaskFailure)]
