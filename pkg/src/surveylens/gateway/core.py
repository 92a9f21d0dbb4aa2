"""The gateway: parallel structured completions with retries, budgets,
a single repair re-ask, and usage accounting.

Every task primitive goes through Gateway.complete_structured (or
run_parallel for batches).  Concurrency is bounded by max_in_flight;
request and token budgets are enforced over a sliding 60-second window
so a run never exceeds provider rate limits regardless of batch size.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .clock import Clock, SystemClock
from .errors import AuthenticationError, GatewayError, StructuredOutputError, TransportError
from .ledger import UsageLedger
from .providers import (
    ChatRequest,
    MalformedReplyError,
    Provider,
    ProviderStatusError,
    TransportFailure,
    estimate_tokens,
)
from .schema import KIND_STRING, OutputSchema, PayloadValidationError

_WINDOW_SECONDS = 60.0

_REPAIR_INSTRUCTION = (
    "The previous function call was invalid: {problem}. "
    "Call the function again with a complete, corrected arguments object "
    "that satisfies the declared schema."
)


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base_backoff: float = 1.0
    backoff_multiplier: float = 2.0
    retryable_statuses: tuple[int, ...] = (429, 500, 502, 503, 504)

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.base_backoff < 0 or self.backoff_multiplier <= 0:
            raise ValueError("backoff parameters must be positive")

    def delay(self, retry_index: int) -> float:
        return self.base_backoff * self.backoff_multiplier**retry_index


@dataclass(frozen=True)
class GatewayConfig:
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    max_in_flight: int = 8
    requests_per_minute: int = 3500
    tokens_per_minute: int = 90_000
    request_timeout: float = 60.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.requests_per_minute < 1 or self.tokens_per_minute < 1:
            raise ValueError("rate budgets must be >= 1")


@dataclass(frozen=True)
class PromptBundle:
    """Everything needed for one structured completion."""

    system_text: str
    user_text: str
    schema: OutputSchema
    model_id: str
    temperature: float = 0.0
    task_kind: str = "generic"

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        reasoning_ok = any(
            f.name == "reasoning" and f.kind == KIND_STRING and f.required
            for f in self.schema.fields
        )
        if not reasoning_ok:
            raise ValueError(
                f"schema {self.schema.name!r} must declare a required "
                "'reasoning' string field"
            )


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )


@dataclass(frozen=True)
class TaskOutcome:
    reasoning: str
    payload: dict[str, Any]
    usage: TokenUsage
    model_id: str
    attempts: int


ValidateHook = Callable[[dict[str, Any]], None]


class Gateway:
    def __init__(
        self,
        provider: Provider,
        config: GatewayConfig | None = None,
        ledger: UsageLedger | None = None,
        clock: Clock | None = None,
    ) -> None:
        self._provider = provider
        self._config = config or GatewayConfig()
        self._ledger = ledger if ledger is not None else UsageLedger()
        self._clock = clock if clock is not None else SystemClock()
        self._in_flight = threading.Semaphore(self._config.max_in_flight)
        self._budget_lock = threading.Lock()
        self._request_window: deque[float] = deque()
        self._token_window: deque[tuple[float, int]] = deque()
        self._window_tokens = 0
        # Full dispatch history (timestamp, estimated tokens); lets tests
        # check the sliding-window budgets after the fact.
        self.dispatch_log: list[tuple[float, int]] = []

    @property
    def ledger(self) -> UsageLedger:
        return self._ledger

    @property
    def config(self) -> GatewayConfig:
        return self._config

    def complete_structured(
        self, bundle: PromptBundle, validate: ValidateHook | None = None
    ) -> TaskOutcome:
        """Run one structured completion to a validated payload.

        Transport-level failures and retryable statuses are retried with
        exponential backoff up to retry.max_attempts sends; 401/403 fail
        immediately.  A reply that parses but violates the schema (or the
        optional semantic `validate` hook) triggers exactly one repair
        re-ask quoting the problem; a second bad reply raises
        StructuredOutputError with the raw text attached.
        """
        policy = self._config.retry
        messages: list[tuple[str, str]] = [
            ("system", bundle.system_text),
            ("user", bundle.user_text),
        ]
        attempts = 0
        retries = 0
        repair_used = False
        usage = TokenUsage()
        while True:
            attempts += 1
            request = ChatRequest(
                model_id=bundle.model_id,
                messages=tuple(messages),
                schema=bundle.schema,
                temperature=bundle.temperature,
            )
            self._acquire_budget(estimate_tokens(request.total_text))
            try:
                with self._in_flight:
                    reply = self._provider.send(request)
            except ProviderStatusError as exc:
                if exc.status in (401, 403):
                    raise AuthenticationError(str(exc)) from exc
                if exc.status in policy.retryable_statuses and attempts < policy.max_attempts:
                    self._clock.sleep(policy.delay(retries))
                    retries += 1
                    continue
                raise TransportError(
                    f"request failed after {attempts} attempt(s): {exc}",
                    attempts=attempts,
                    status=exc.status,
                ) from exc
            except (TransportFailure, MalformedReplyError) as exc:
                if attempts < policy.max_attempts:
                    self._clock.sleep(policy.delay(retries))
                    retries += 1
                    continue
                raise TransportError(
                    f"request failed after {attempts} attempt(s): {exc}",
                    attempts=attempts,
                ) from exc

            self._ledger.record(
                bundle.task_kind, bundle.model_id, reply.prompt_tokens, reply.completion_tokens
            )
            usage = usage + TokenUsage(reply.prompt_tokens, reply.completion_tokens)
            payload, problem = self._evaluate_reply(bundle.schema, reply.arguments_text, validate)
            if problem is None:
                assert payload is not None
                return TaskOutcome(
                    reasoning=str(payload.get("reasoning", "")),
                    payload=payload,
                    usage=usage,
                    model_id=bundle.model_id,
                    attempts=attempts,
                )
            if not repair_used:
                repair_used = True
                messages.append(("assistant", reply.arguments_text))
                messages.append(("user", _REPAIR_INSTRUCTION.format(problem=problem)))
                continue
            raise StructuredOutputError(problem, raw_text=reply.arguments_text)

    def run_parallel(
        self, bundles: Sequence[PromptBundle], validate: ValidateHook | None = None
    ) -> list[TaskOutcome | GatewayError]:
        """Run bundles concurrently; slot i always answers bundle i.

        Gateway errors are captured in their slot so one bad item cannot
        sink a batch; non-gateway exceptions (bugs, unscripted mocks)
        propagate.
        """
        bundles = list(bundles)
        if not bundles:
            return []
        results: list[TaskOutcome | GatewayError | None] = [None] * len(bundles)
        workers = min(self._config.max_in_flight, len(bundles))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(self.complete_structured, bundle, validate): index
                for index, bundle in enumerate(bundles)
            }
            for future in as_completed(futures):
                index = futures[future]
                try:
                    results[index] = future.result()
                except GatewayError as exc:
                    results[index] = exc
        return results  # type: ignore[return-value]

    def _evaluate_reply(
        self,
        schema: OutputSchema,
        arguments_text: str,
        validate: ValidateHook | None,
    ) -> tuple[dict[str, Any] | None, str | None]:
        try:
            payload = json.loads(arguments_text)
        except json.JSONDecodeError as exc:
            return None, f"arguments were not valid json ({exc.msg})"
        try:
            schema.validate(payload)
            if validate is not None:
                validate(payload)
        except PayloadValidationError as exc:
            return None, str(exc)
        return payload, None

    def _acquire_budget(self, estimated_tokens: int) -> None:
        """Block until the dispatch fits both sliding-window budgets."""
        while True:
            with self._budget_lock:
                now = self._clock.now()
                cutoff = now - _WINDOW_SECONDS
                while self._request_window and self._request_window[0] <= cutoff:
                    self._request_window.popleft()
                while self._token_window and self._token_window[0][0] <= cutoff:
                    self._window_tokens -= self._token_window.popleft()[1]
                fits_requests = len(self._request_window) < self._config.requests_per_minute
                # An oversized single request is allowed into an empty
                # window; holding it forever would deadlock the caller.
                fits_tokens = (
                    self._window_tokens + estimated_tokens <= self._config.tokens_per_minute
                    or not self._token_window
                )
                if fits_requests and fits_tokens:
                    self._request_window.append(now)
                    self._token_window.append((now, estimated_tokens))
                    self._window_tokens += estimated_tokens
                    self.dispatch_log.append((now, estimated_tokens))
                    return
                waits = []
                if not fits_requests:
                    waits.append(self._request_window[0] - cutoff)
                if not fits_tokens and self._token_window:
                    waits.append(self._token_window[0][0] - cutoff)
                wait = max(min(waits), 0.001)
            self._clock.sleep(wait)


def flatten_errors(
    results: Iterable[TaskOutcome | GatewayError],
) -> tuple[list[TaskOutcome], list[tuple[int, GatewayError]]]:
    """Split a run_parallel result into outcomes and (index, error) pairs."""
    outcomes: list[TaskOutcome] = []
    errors: list[tuple[int, GatewayError]] = []
    for index, result in enumerate(results):
        if isinstance(result, GatewayError):
            errors.append((index, result))
        else:
            outcomes.append(result)
    return outcomes, errors
