"""Composable workflows: stage engine plus the five shipped presets."""

from .presets import (
    DEFAULT_CONTENT_GAP_GOAL,
    DEFAULT_IMPROVEMENT_CRITERION,
    DEFAULT_IMPROVEMENT_GOAL,
    PRESETS,
    run_bottom_up_themes,
    run_content_gaps,
    run_focused_feedback,
    run_improvement_suggestions,
    run_preset,
    run_top_down_multilabel,
)
from .runner import (
    Stage,
    StageOutcome,
    StageRecord,
    WorkflowContext,
    WorkflowRun,
    canonical_json,
    content_hash,
    corpus_rows,
    read_jsonl,
    run_workflow,
    write_jsonl,
)

__all__ = [
    "DEFAULT_CONTENT_GAP_GOAL",
    "DEFAULT_IMPROVEMENT_CRITERION",
    "DEFAULT_IMPROVEMENT_GOAL",
    "PRESETS",
    "Stage",
    "StageOutcome",
    "StageRecord",
    "WorkflowContext",
    "WorkflowRun",
    "canonical_json",
    "content_hash",
    "corpus_rows",
    "read_jsonl",
    "run_preset",
    "run_bottom_up_themes",
    "run_content_gaps",
    "run_focused_feedback",
    "run_improvement_suggestions",
    "run_top_down_multilabel",
    "run_workflow",
    "write_jsonl",
]
