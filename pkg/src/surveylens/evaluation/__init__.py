"""Deterministic evaluation: metrics, consensus, agreement, fidelity,
and the LLM-judged extraction rubric."""

from .consensus import (
    MODES,
    AgreementMatrix,
    ConsensusResult,
    CoverageError,
    agreement_matrix,
    average_pairs,
    consensus,
)
from .fidelity import (
    DEFAULT_MINOR_EDIT_THRESHOLD,
    HALLUCINATION,
    MINOR_EDIT,
    VERBATIM,
    FidelityReport,
    FidelityVerdict,
    UnknownSourceError,
    judge_excerpt,
    verify_excerpts,
)
from .labels import AlignmentError, LabelMatrix, require_aligned
from .metrics import (
    BinaryReport,
    MetricReport,
    SentimentReport,
    TagMetrics,
    binary_report,
    jaccard,
    mean_rounded,
    multilabel_report,
    round_half_even,
    sentiment_report,
)
from .rubric import (
    RubricVerdict,
    judge_extraction,
    judge_extraction_batch,
    rubric_error_rates,
)

__all__ = [
    "AgreementMatrix",
    "AlignmentError",
    "BinaryReport",
    "ConsensusResult",
    "CoverageError",
    "DEFAULT_MINOR_EDIT_THRESHOLD",
    "FidelityReport",
    "FidelityVerdict",
    "HALLUCINATION",
    "LabelMatrix",
    "MINOR_EDIT",
    "MODES",
    "MetricReport",
    "RubricVerdict",
    "SentimentReport",
    "TagMetrics",
    "UnknownSourceError",
    "VERBATIM",
    "agreement_matrix",
    "average_pairs",
    "binary_report",
    "consensus",
    "jaccard",
    "judge_excerpt",
    "judge_extraction",
    "judge_extraction_batch",
    "mean_rounded",
    "multilabel_report",
    "require_aligned",
    "round_half_even",
    "rubric_error_rates",
    "sentiment_report",
    "verify_excerpts",
]
