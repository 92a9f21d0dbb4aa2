"""surveylens: quantify free-text survey feedback with LLM workflows.

The package composes structured LLM task primitives (classification,
extraction, sentiment, thematic analysis) into resumable workflows over
a provider-agnostic gateway, and ships a deterministic evaluation suite
for the results.
"""

from .config import AppConfig, ConfigError, load_config
from .corpus import (
    AnnotationSet,
    Corpus,
    CorpusError,
    Provenance,
    SurveyResponse,
    clean,
    export_corpus,
    filter_questions,
    load_annotation_set,
    load_corpus,
    sample,
    save_annotation_set,
    validate_annotations,
)
from .evaluation import (
    AgreementMatrix,
    ConsensusResult,
    FidelityReport,
    LabelMatrix,
    MetricReport,
    RubricVerdict,
    agreement_matrix,
    binary_report,
    consensus,
    judge_extraction,
    judge_extraction_batch,
    multilabel_report,
    rubric_error_rates,
    sentiment_report,
    verify_excerpts,
)
from .gateway import (
    Gateway,
    GatewayConfig,
    GatewayError,
    HttpProvider,
    OutputSchema,
    PromptBundle,
    RetryPolicy,
    ScriptedProvider,
    TaskOutcome,
    UsageLedger,
    VirtualClock,
    cost_report,
)
from .tasks import (
    DEFAULT_TAGSET,
    Tag,
    TagSet,
    TaskFailure,
    classify_binary,
    classify_multiclass,
    classify_multilabel,
    collapse_sentiment,
    extract_excerpts,
    load_tagset,
    rate_sentiment,
)
from .thematic import (
    Theme,
    ThemeSet,
    classify_with_themes,
    coalesce_themes,
    derive_themes,
    make_batches,
)
from .workflows import PRESETS, WorkflowContext, WorkflowRun, run_preset

__version__ = "0.1.0"

__all__ = [
    "AgreementMatrix",
    "AnnotationSet",
    "AppConfig",
    "ConfigError",
    "ConsensusResult",
    "Corpus",
    "CorpusError",
    "DEFAULT_TAGSET",
    "FidelityReport",
    "Gateway",
    "GatewayConfig",
    "GatewayError",
    "HttpProvider",
    "LabelMatrix",
    "MetricReport",
    "OutputSchema",
    "PRESETS",
    "PromptBundle",
    "Provenance",
    "RetryPolicy",
    "RubricVerdict",
    "ScriptedProvider",
    "SurveyResponse",
    "Tag",
    "TagSet",
    "TaskFailure",
    "TaskOutcome",
    "Theme",
    "ThemeSet",
    "UsageLedger",
    "VirtualClock",
    "WorkflowContext",
    "WorkflowRun",
    "agreement_matrix",
    "binary_report",
    "classify_binary",
    "classify_multiclass",
    "classify_multilabel",
    "classify_with_themes",
    "clean",
    "coalesce_themes",
    "collapse_sentiment",
    "consensus",
    "cost_report",
    "derive_themes",
    "export_corpus",
    "extract_excerpts",
    "filter_questions",
    "judge_extraction",
    "judge_extraction_batch",
    "load_annotation_set",
    "load_config",
    "load_corpus",
    "load_tagset",
    "make_batches",
    "multilabel_report",
    "rate_sentiment",
    "rubric_error_rates",
    "run_preset",
    "sample",
    "save_annotation_set",
    "sentiment_report",
    "validate_annotations",
    "verify_excerpts",
    "__version__",
]
