"""Provider-agnostic LLM gateway: schemas, providers, budgets, usage."""

from .clock import Clock, SystemClock, VirtualClock
from .core import (
    Gateway,
    GatewayConfig,
    PromptBundle,
    RetryPolicy,
    TaskOutcome,
    TokenUsage,
    flatten_errors,
)
from .errors import AuthenticationError, GatewayError, StructuredOutputError, TransportError
from .ledger import (
    CostRow,
    MissingPricingError,
    ModelPricing,
    UsageEntry,
    UsageLedger,
    cost_report,
    write_cost_report_csv,
)
from .providers import (
    ChatRequest,
    HttpProvider,
    MalformedReplyError,
    Provider,
    ProviderReply,
    ProviderStatusError,
    ScriptEntry,
    ScriptedProvider,
    TransportFailure,
    UnscriptedRequestError,
    estimate_tokens,
)
from .schema import (
    KIND_ENUM,
    KIND_OBJECT_LIST,
    KIND_STRING,
    KIND_STRING_LIST,
    FieldSpec,
    OutputSchema,
    PayloadValidationError,
    SchemaError,
    with_reasoning,
)

__all__ = [
    "AuthenticationError",
    "ChatRequest",
    "Clock",
    "CostRow",
    "FieldSpec",
    "Gateway",
    "GatewayConfig",
    "GatewayError",
    "HttpProvider",
    "KIND_ENUM",
    "KIND_OBJECT_LIST",
    "KIND_STRING",
    "KIND_STRING_LIST",
    "MalformedReplyError",
    "MissingPricingError",
    "ModelPricing",
    "OutputSchema",
    "PayloadValidationError",
    "PromptBundle",
    "Provider",
    "ProviderReply",
    "ProviderStatusError",
    "RetryPolicy",
    "SchemaError",
    "ScriptEntry",
    "ScriptedProvider",
    "StructuredOutputError",
    "SystemClock",
    "TaskOutcome",
    "TokenUsage",
    "TransportError",
    "TransportFailure",
    "UnscriptedRequestError",
    "UsageEntry",
    "UsageLedger",
    "VirtualClock",
    "cost_report",
    "estimate_tokens",
    "flatten_errors",
    "with_reasoning",
]
