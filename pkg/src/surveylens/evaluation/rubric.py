"""LLM-judged extraction quality rubric.

A judge model answers nine yes/no questions about one comment's
extracted excerpts; "yes" always marks a failure.  Error rates per
category are flagged counts over total verdicts, as percentages.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from ..corpus import SurveyResponse
from ..gateway import Gateway, GatewayError
from ..tasks.primitives import (
    DEFAULT_MODEL_ID,
    RUBRIC_CATEGORIES,
    Excerpt,
    TaskFailure,
    build_prompt,
)
from ..tasks.prompts import TemplateSet, default_templates
from .metrics import round_half_even


@dataclass(frozen=True)
class RubricVerdict:
    comment_id: str
    flags: Mapping[str, bool]  # category -> failed?
    reasoning: str

    def __post_init__(self) -> None:
        missing = [c for c in RUBRIC_CATEGORIES if c not in self.flags]
        if missing:
            raise ValueError(f"verdict for {self.comment_id!r} missing categories: {missing}")

    def failed(self, category: str) -> bool:
        if category not in RUBRIC_CATEGORIES:
            raise KeyError(f"unknown rubric category {category!r}")
        return self.flags[category]

    def as_row(self) -> dict[str, Any]:
        row: dict[str, Any] = {"id": self.comment_id}
        row.update({c: self.flags[c] for c in RUBRIC_CATEGORIES})
        row["reasoning"] = self.reasoning
        return row


def _excerpts_block(excerpts: Sequence[str]) -> str:
    if not excerpts:
        return "(no excerpts were extracted)"
    return "\n".join(f"{i}. \"{text}\"" for i, text in enumerate(excerpts, start=1))


def _excerpt_texts(excerpts: Sequence[str] | Sequence[Excerpt]) -> list[str]:
    return [e.text if isinstance(e, Excerpt) else e for e in excerpts]


def _verdict_from_payload(comment_id: str, payload: Mapping[str, Any], reasoning: str) -> RubricVerdict:
    return RubricVerdict(
        comment_id=comment_id,
        flags={c: payload[c] == "yes" for c in RUBRIC_CATEGORIES},
        reasoning=reasoning,
    )


def judge_extraction(
    comment: SurveyResponse,
    goal: str,
    excerpts: Sequence[str] | Sequence[Excerpt],
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> RubricVerdict:
    bundle = build_prompt(
        "judge_extraction",
        comment.text,
        comment.question_text,
        goal=goal,
        excerpts_block=_excerpts_block(_excerpt_texts(excerpts)),
        model_id=model_id,
        temperature=temperature,
        templates=templates or default_templates(),
    )
    outcome = gateway.complete_structured(bundle)
    return _verdict_from_payload(comment.id, outcome.payload, outcome.reasoning)


def judge_extraction_batch(
    items: Sequence[tuple[SurveyResponse, Sequence[str] | Sequence[Excerpt]]],
    goal: str,
    gateway: Gateway,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    temperature: float = 0.0,
    templates: TemplateSet | None = None,
) -> list[RubricVerdict | TaskFailure]:
    """Judge many comments in parallel; failures come back in-slot."""
    templates = templates or default_templates()
    bundles = [
        build_prompt(
            "judge_extraction",
            comment.text,
            comment.question_text,
            goal=goal,
            excerpts_block=_excerpts_block(_excerpt_texts(excerpts)),
            model_id=model_id,
            temperature=temperature,
            templates=templates,
        )
        for comment, excerpts in items
    ]
    results: list[RubricVerdict | TaskFailure] = []
    for (comment, _), outcome in zip(items, gateway.run_parallel(bundles)):
        if isinstance(outcome, GatewayError):
            results.append(TaskFailure(comment.id, "judge_extraction", str(outcome)))
        else:
            results.append(_verdict_from_payload(comment.id, outcome.payload, outcome.reasoning))
    return results


def rubric_error_rates(verdicts: Sequence[RubricVerdict]) -> list[tuple[str, float]]:
    """(category, percent) rows in rubric order, half-even at 2 places."""
    if not verdicts:
        raise ValueError("need at least one verdict")
    rates: list[tuple[str, float]] = []
    for category in RUBRIC_CATEGORIES:
        flagged = sum(1 for v in verdicts if v.flags[category])
        rates.append((category, round_half_even(flagged / len(verdicts) * 100.0, places=2)))
    return rates
