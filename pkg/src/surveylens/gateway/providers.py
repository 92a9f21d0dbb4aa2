"""LLM providers: an OpenAI-compatible HTTP client and a scripted mock.

Both speak the same request/reply shape so everything above them is
provider-agnostic.  Structured output travels as a forced tool call; the
reply carries the raw arguments document plus token usage.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Protocol, runtime_checkable

import httpx

from .errors import AuthenticationError
from .schema import OutputSchema


def estimate_tokens(text: str) -> int:
    """Conservative size heuristic: one token per four characters."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[tuple[str, str], ...]  # (role, content)
    schema: OutputSchema
    temperature: float = 0.0

    @property
    def user_text(self) -> str:
        return "\n".join(content for role, content in self.messages if role == "user")

    @property
    def total_text(self) -> str:
        return "\n".join(content for _, content in self.messages)


@dataclass(frozen=True)
class ProviderReply:
    arguments_text: str
    prompt_tokens: int
    completion_tokens: int


class ProviderStatusError(Exception):
    """Non-2xx HTTP status from the provider."""

    def __init__(self, status: int, detail: str = "") -> None:
        super().__init__(f"provider returned status {status}: {detail[:200]}")
        self.status = status
        self.detail = detail


class TransportFailure(Exception):
    """Connection-level failure (timeout, refused, reset)."""


class MalformedReplyError(Exception):
    """2xx reply whose body does not carry a structured result."""


class UnscriptedRequestError(AssertionError):
    """The scripted provider saw a request no entry matches."""

    def __init__(self, user_text: str) -> None:
        super().__init__(f"unscripted request: {user_text[:80]!r}")


@runtime_checkable
class Provider(Protocol):
    def send(self, request: ChatRequest) -> ProviderReply: ...


class HttpProvider:
    """Chat-completions client for any OpenAI-compatible endpoint.

    The API key is read from the environment at send time via the
    configured variable name; it is never logged or persisted.
    """

    def __init__(
        self,
        base_url: str,
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ) -> None:
        self._base_url = base_url.rstrip("/")
        self._api_key_env = api_key_env
        self._timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def send(self, request: ChatRequest) -> ProviderReply:
        api_key = os.environ.get(self._api_key_env)
        if not api_key:
            raise AuthenticationError(
                f"environment variable {self._api_key_env!r} is not set"
            )
        body = {
            "model": request.model_id,
            "temperature": request.temperature,
            "messages": [
                {"role": role, "content": content} for role, content in request.messages
            ],
            "tools": [request.schema.to_tool()],
            "tool_choice": {
                "type": "function",
                "function": {"name": request.schema.name},
            },
        }
        try:
            response = self._client.post(
                f"{self._base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {api_key}"},
            )
        except httpx.HTTPError as exc:
            raise TransportFailure(str(exc)) from exc
        if response.status_code >= 400:
            raise ProviderStatusError(response.status_code, response.text)
        return self._parse_reply(response.json())

    @staticmethod
    def _parse_reply(payload: dict[str, Any]) -> ProviderReply:
        try:
            message = payload["choices"][0]["message"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedReplyError(f"reply missing choices/message: {exc}") from exc
        arguments: str | None = None
        for call in message.get("tool_calls") or ():
            function = call.get("function") or {}
            if "arguments" in function:
                arguments = function["arguments"]
                break
        if arguments is None:
            # Some compatible servers answer in plain content; let schema
            # validation upstream decide whether it parses.
            arguments = message.get("content")
        if not isinstance(arguments, str):
            raise MalformedReplyError("reply carries neither tool arguments nor content")
        usage = payload.get("usage") or {}
        return ProviderReply(
            arguments_text=arguments,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


@dataclass(frozen=True)
class ScriptEntry:
    """One canned exchange for the scripted provider.

    match=None makes the entry positional (consumed once, in order);
    a string makes it key-matched: it fires for any request whose user
    text contains the string, any number of times.  status simulates an
    HTTP failure instead of answering.
    """

    payload: Any = None
    match: str | None = None
    status: int | None = None
    prompt_tokens: int | None = None
    completion_tokens: int | None = None

    def arguments_text(self) -> str:
        if isinstance(self.payload, str):
            return self.payload
        return json.dumps(self.payload)


class ScriptedProvider:
    """Deterministic in-process provider driven by a script.

    Key-matched entries are checked first (first declared match wins);
    otherwise the next positional entry is consumed.  A request nothing
    matches raises UnscriptedRequestError so tests fail loudly.
    """

    def __init__(self, entries: Iterable[ScriptEntry] = ()) -> None:
        entries = list(entries)
        self._keyed = [e for e in entries if e.match is not None]
        self._positional = [e for e in entries if e.match is None]
        self._cursor = 0
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        """Load script entries from jsonl rows of ScriptEntry fields."""
        entries: list[ScriptEntry] = []
        with Path(path).open(encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}: line {number}: invalid json ({exc.msg})") from exc
                entries.append(
                    ScriptEntry(
                        payload=raw.get("payload"),
                        match=raw.get("match"),
                        status=raw.get("status"),
                        prompt_tokens=raw.get("prompt_tokens"),
                        completion_tokens=raw.get("completion_tokens"),
                    )
                )
        return cls(entries)

    def pending(self) -> int:
        with self._lock:
            return len(self._positional) - self._cursor

    def _next_entry(self, request: ChatRequest) -> ScriptEntry:
        with self._lock:
            self.requests.append(request)
            for entry in self._keyed:
                if entry.match is not None and entry.match in request.user_text:
                    return entry
            if self._cursor < len(self._positional):
                entry = self._positional[self._cursor]
                self._cursor += 1
                return entry
        raise UnscriptedRequestError(request.user_text)

    def send(self, request: ChatRequest) -> ProviderReply:
        entry = self._next_entry(request)
        if entry.status is not None:
            raise ProviderStatusError(entry.status, "scripted failure")
        arguments = entry.arguments_text()
        prompt = entry.prompt_tokens
        completion = entry.completion_tokens
        if prompt is None:
            prompt = estimate_tokens(request.total_text)
        if completion is None:
            completion = estimate_tokens(arguments)
        return ProviderReply(arguments, prompt, completion)
