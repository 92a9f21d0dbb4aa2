import json

import httpx
import pytest

from surveylens.gateway import (
    AuthenticationError,
    ChatRequest,
    HttpProvider,
    ProviderStatusError,
    ScriptedProvider,
    ScriptEntry,
    TransportFailure,
    UnscriptedRequestError,
    estimate_tokens,
)
from surveylens.gateway.providers import MalformedReplyError
from surveylens.tasks.primitives import binary_schema

from conftest import binary_args


def _request(user_text="hello", system_text="sys", model="gpt-4"):
    return ChatRequest(
        model_id=model,
        messages=(("system", system_text), ("user", user_text)),
        schema=binary_schema(),
    )


def _tool_reply(arguments, prompt=12, completion=7):
    return {
        "choices": [
            {
                "message": {
                    "tool_calls": [
                        {"function": {"name": "record_binary_answer", "arguments": arguments}}
                    ]
                }
            }
        ],
        "usage": {"prompt_tokens": prompt, "completion_tokens": completion},
    }


def test_estimate_tokens_quarters_chars():
    assert estimate_tokens("") == 0
    assert estimate_tokens("abcd") == 1
    assert estimate_tokens("abcde") == 2


def test_chat_request_text_views():
    request = _request()
    assert request.user_text == "hello"
    assert request.total_text == "sys\nhello"


# --- HttpProvider over a mock transport ------------------------------------


def _provider_with(handler, env=None, monkeypatch=None):
    if monkeypatch is not None:
        monkeypatch.delenv("TEST_KEY", raising=False)
        if env is not None:
            monkeypatch.setenv("TEST_KEY", env)
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpProvider("https://example.test/v1", api_key_env="TEST_KEY", client=client)


def test_http_provider_requires_key_at_send(monkeypatch):
    provider = _provider_with(lambda req: httpx.Response(200), monkeypatch=monkeypatch)
    with pytest.raises(AuthenticationError, match="TEST_KEY"):
        provider.send(_request())


def test_http_provider_happy_path(monkeypatch):
    captured = {}

    def handler(req: httpx.Request) -> httpx.Response:
        captured["url"] = str(req.url)
        captured["auth"] = req.headers.get("authorization")
        captured["body"] = json.loads(req.content)
        return httpx.Response(200, json=_tool_reply(json.dumps(binary_args("yes"))))

    provider = _provider_with(handler, env="sk-test", monkeypatch=monkeypatch)
    reply = provider.send(_request(user_text="classify me"))
    assert captured["url"] == "https://example.test/v1/chat/completions"
    assert captured["auth"] == "Bearer sk-test"
    body = captured["body"]
    assert body["model"] == "gpt-4"
    assert body["tool_choice"] == {
        "type": "function",
        "function": {"name": "record_binary_answer"},
    }
    assert body["messages"][1] == {"role": "user", "content": "classify me"}
    assert [t["function"]["name"] for t in body["tools"]] == ["record_binary_answer"]
    assert json.loads(reply.arguments_text) == binary_args("yes")
    assert (reply.prompt_tokens, reply.completion_tokens) == (12, 7)


def test_http_provider_status_error(monkeypatch):
    provider = _provider_with(
        lambda req: httpx.Response(429, text="slow down"), env="k", monkeypatch=monkeypatch
    )
    with pytest.raises(ProviderStatusError) as info:
        provider.send(_request())
    assert info.value.status == 429


def test_http_provider_transport_failure(monkeypatch):
    def handler(req):
        raise httpx.ConnectError("refused")

    provider = _provider_with(handler, env="k", monkeypatch=monkeypatch)
    with pytest.raises(TransportFailure):
        provider.send(_request())


def test_http_provider_content_fallback(monkeypatch):
    reply_body = {
        "choices": [{"message": {"content": '{"reasoning": "r", "answer": "no"}'}}],
        "usage": {},
    }
    provider = _provider_with(
        lambda req: httpx.Response(200, json=reply_body), env="k", monkeypatch=monkeypatch
    )
    reply = provider.send(_request())
    assert json.loads(reply.arguments_text)["answer"] == "no"
    assert reply.prompt_tokens == 0


def test_http_provider_malformed_reply(monkeypatch):
    provider = _provider_with(
        lambda req: httpx.Response(200, json={"choices": [{"message": {}}]}),
        env="k",
        monkeypatch=monkeypatch,
    )
    with pytest.raises(MalformedReplyError):
        provider.send(_request())


# --- ScriptedProvider --------------------------------------------------------


def test_scripted_positional_entries_in_order():
    provider = ScriptedProvider(
        [ScriptEntry(payload=binary_args("yes")), ScriptEntry(payload=binary_args("no"))]
    )
    first = provider.send(_request("a"))
    second = provider.send(_request("b"))
    assert json.loads(first.arguments_text)["answer"] == "yes"
    assert json.loads(second.arguments_text)["answer"] == "no"
    assert provider.pending() == 0


def test_scripted_keyed_entries_match_substring_and_repeat():
    provider = ScriptedProvider(
        [
            ScriptEntry(payload=binary_args("yes"), match="quiz"),
            ScriptEntry(payload=binary_args("no")),
        ]
    )
    for _ in range(3):
        reply = provider.send(_request("the quiz was hard"))
        assert json.loads(reply.arguments_text)["answer"] == "yes"
    # keyed entries never consume positional ones
    assert provider.pending() == 1


def test_scripted_keyed_checked_before_positional():
    provider = ScriptedProvider(
        [
            ScriptEntry(payload=binary_args("no")),
            ScriptEntry(payload=binary_args("yes"), match="hello"),
        ]
    )
    reply = provider.send(_request("hello there"))
    assert json.loads(reply.arguments_text)["answer"] == "yes"


def test_scripted_unmatched_raises_with_preview():
    provider = ScriptedProvider([])
    with pytest.raises(UnscriptedRequestError, match="unscripted request"):
        provider.send(_request("x" * 200))


def test_scripted_status_entry_simulates_failure():
    provider = ScriptedProvider([ScriptEntry(status=503)])
    with pytest.raises(ProviderStatusError) as info:
        provider.send(_request())
    assert info.value.status == 503


def test_scripted_default_usage_is_estimated():
    provider = ScriptedProvider([ScriptEntry(payload=binary_args("yes"))])
    request = _request(user_text="u" * 40, system_text="s" * 10)
    reply = provider.send(request)
    assert reply.prompt_tokens == estimate_tokens(request.total_text)
    assert reply.completion_tokens == estimate_tokens(reply.arguments_text)


def test_scripted_explicit_usage_wins():
    provider = ScriptedProvider(
        [ScriptEntry(payload=binary_args("yes"), prompt_tokens=100, completion_tokens=5)]
    )
    reply = provider.send(_request())
    assert (reply.prompt_tokens, reply.completion_tokens) == (100, 5)


def test_scripted_from_file(tmp_path):
    path = tmp_path / "script.jsonl"
    path.write_text(
        json.dumps({"payload": binary_args("yes"), "match": "quiz"})
        + "\n"
        + json.dumps({"status": 500})
        + "\n"
    )
    provider = ScriptedProvider.from_file(path)
    reply = provider.send(_request("about the quiz"))
    assert json.loads(reply.arguments_text)["answer"] == "yes"
    with pytest.raises(ProviderStatusError):
        provider.send(_request("anything else"))


def test_scripted_from_file_bad_json(tmp_path):
    path = tmp_path / "script.jsonl"
    path.write_text("{nope\n")
    with pytest.raises(ValueError, match="line 1"):
        ScriptedProvider.from_file(path)


def test_scripted_records_requests():
    provider = ScriptedProvider([ScriptEntry(payload=binary_args("yes"))])
    provider.send(_request("only one"))
    assert len(provider.requests) == 1
    assert provider.requests[0].user_text == "only one"
