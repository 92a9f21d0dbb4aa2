"""Application configuration: TOML file -> AppConfig.

Command-line flags win over file values; secrets are never stored in
config, only the *name* of the environment variable that holds the API
key.  Unknown keys are rejected so typos fail at load instead of
silently running with defaults.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .corpus import DEFAULT_SENTINELS
from .gateway import GatewayConfig, ModelPricing, RetryPolicy
from .tasks.prompts import TemplateSet
from .tasks.tags import DEFAULT_TAGSET, TagSet, load_tagset

DEFAULT_PRICING: dict[str, ModelPricing] = {
    "gpt-4": ModelPricing.of("0.03", "0.06"),
    "gpt-3.5-turbo": ModelPricing.of("0.0015", "0.002"),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AppConfig:
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    primary_model: str = "gpt-4"
    judge_model: str = "gpt-4"
    pricing: Mapping[str, ModelPricing] = field(default_factory=lambda: dict(DEFAULT_PRICING))
    tagset: TagSet = DEFAULT_TAGSET
    templates_dir: Path | None = None
    context_budget_tokens: int = 8192
    overhead_tokens: int = 512
    sentinels: tuple[str, ...] = DEFAULT_SENTINELS
    minor_edit_threshold: float = 0.1
    output_dir: Path = Path("runs")

    def __post_init__(self) -> None:
        for model in (self.primary_model, self.judge_model):
            if model not in self.pricing:
                raise ConfigError(f"no pricing configured for model {model!r}")
        if self.context_budget_tokens <= self.overhead_tokens:
            raise ConfigError("context_budget_tokens must exceed overhead_tokens")

    def load_templates(self) -> TemplateSet:
        return TemplateSet.load(self.templates_dir)


def _check_keys(section: Mapping[str, Any], allowed: set[str], where: str) -> None:
    stray = sorted(set(section) - allowed)
    if stray:
        raise ConfigError(f"unknown key(s) in {where}: {stray}")


def _parse_retry(raw: Mapping[str, Any]) -> RetryPolicy:
    _check_keys(raw, {"max_attempts", "base_backoff", "backoff_multiplier", "retryable_statuses"}, "[gateway.retry]")
    defaults = RetryPolicy()
    return RetryPolicy(
        max_attempts=int(raw.get("max_attempts", defaults.max_attempts)),
        base_backoff=float(raw.get("base_backoff", defaults.base_backoff)),
        backoff_multiplier=float(raw.get("backoff_multiplier", defaults.backoff_multiplier)),
        retryable_statuses=tuple(
            int(s) for s in raw.get("retryable_statuses", defaults.retryable_statuses)
        ),
    )


def _parse_gateway(raw: Mapping[str, Any]) -> GatewayConfig:
    _check_keys(
        raw,
        {"base_url", "api_key_env", "max_in_flight", "requests_per_minute",
         "tokens_per_minute", "request_timeout", "retry"},
        "[gateway]",
    )
    defaults = GatewayConfig()
    return GatewayConfig(
        base_url=str(raw.get("base_url", defaults.base_url)),
        api_key_env=str(raw.get("api_key_env", defaults.api_key_env)),
        max_in_flight=int(raw.get("max_in_flight", defaults.max_in_flight)),
        requests_per_minute=int(raw.get("requests_per_minute", defaults.requests_per_minute)),
        tokens_per_minute=int(raw.get("tokens_per_minute", defaults.tokens_per_minute)),
        request_timeout=float(raw.get("request_timeout", defaults.request_timeout)),
        retry=_parse_retry(raw.get("retry", {})),
    )


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load config from TOML; with no path, return the defaults."""
    if path is None:
        return AppConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = tomllib.loads(path.read_text(encoding="utf-8"))
    _check_keys(raw, {"models", "pricing", "gateway", "analysis", "output"}, "config")

    models = raw.get("models", {})
    _check_keys(models, {"primary", "judge"}, "[models]")

    pricing = dict(DEFAULT_PRICING)
    for model_id, prices in raw.get("pricing", {}).items():
        _check_keys(prices, {"prompt_per_1k", "completion_per_1k"}, f"[pricing.{model_id}]")
        if "prompt_per_1k" not in prices or "completion_per_1k" not in prices:
            raise ConfigError(f"[pricing.{model_id}] needs prompt_per_1k and completion_per_1k")
        pricing[model_id] = ModelPricing.of(prices["prompt_per_1k"], prices["completion_per_1k"])

    analysis = raw.get("analysis", {})
    _check_keys(
        analysis,
        {"tagset", "templates_dir", "context_budget_tokens", "overhead_tokens",
         "sentinels", "minor_edit_threshold"},
        "[analysis]",
    )
    tagset_spec = analysis.get("tagset", "default")
    if tagset_spec == "default":
        tagset = DEFAULT_TAGSET
    else:
        tagset_path = (path.parent / tagset_spec).resolve()
        if not tagset_path.is_file():
            raise ConfigError(f"tagset file not found: {tagset_path}")
        tagset = load_tagset(tagset_path)

    templates_dir: Path | None = None
    if "templates_dir" in analysis:
        templates_dir = (path.parent / str(analysis["templates_dir"])).resolve()
        if not templates_dir.is_dir():
            raise ConfigError(f"templates directory not found: {templates_dir}")

    output = raw.get("output", {})
    _check_keys(output, {"dir"}, "[output]")

    return AppConfig(
        gateway=_parse_gateway(raw.get("gateway", {})),
        primary_model=str(models.get("primary", "gpt-4")),
        judge_model=str(models.get("judge", "gpt-4")),
        pricing=pricing,
        tagset=tagset,
        templates_dir=templates_dir,
        context_budget_tokens=int(analysis.get("context_budget_tokens", 8192)),
        overhead_tokens=int(analysis.get("overhead_tokens", 512)),
        sentinels=tuple(analysis.get("sentinels", DEFAULT_SENTINELS)),
        minor_edit_threshold=float(analysis.get("minor_edit_threshold", 0.1)),
        output_dir=Path(str(output.get("dir", "runs"))),
    )
