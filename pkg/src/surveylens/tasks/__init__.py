"""Task primitives, prompt templates, and tag vocabularies."""

from .primitives import (
    DEFAULT_MODEL_ID,
    RUBRIC_CATEGORIES,
    SENTIMENT_CLASSES,
    SENTIMENT_LEVELS,
    BinaryResult,
    Excerpt,
    ExtractionResult,
    MultiClassResult,
    MultiLabelResult,
    SentimentResult,
    TaskFailure,
    binary_schema,
    build_prompt,
    classify_binary,
    classify_multiclass,
    classify_multilabel,
    coalesce_schema,
    collapse_sentiment,
    derive_themes_schema,
    extract_excerpts,
    extraction_schema,
    failures,
    flatten_excerpts,
    judge_schema,
    multiclass_schema,
    multilabel_schema,
    rate_sentiment,
    sentiment_schema,
)
from .prompts import SYSTEM_KIND, TASK_KINDS, TemplateError, TemplateSet, default_templates
from .tags import DEFAULT_TAGSET, Tag, TagSet, TagSetError, load_tagset, save_tagset

__all__ = [
    "BinaryResult",
    "DEFAULT_MODEL_ID",
    "DEFAULT_TAGSET",
    "Excerpt",
    "ExtractionResult",
    "MultiClassResult",
    "MultiLabelResult",
    "RUBRIC_CATEGORIES",
    "SENTIMENT_CLASSES",
    "SENTIMENT_LEVELS",
    "SYSTEM_KIND",
    "SentimentResult",
    "TASK_KINDS",
    "Tag",
    "TagSet",
    "TagSetError",
    "TaskFailure",
    "TemplateError",
    "TemplateSet",
    "binary_schema",
    "build_prompt",
    "classify_binary",
    "classify_multiclass",
    "classify_multilabel",
    "coalesce_schema",
    "collapse_sentiment",
    "default_templates",
    "derive_themes_schema",
    "extract_excerpts",
    "extraction_schema",
    "failures",
    "flatten_excerpts",
    "judge_schema",
    "load_tagset",
    "multiclass_schema",
    "multilabel_schema",
    "rate_sentiment",
    "save_tagset",
    "sentiment_schema",
]
