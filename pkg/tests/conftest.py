"""Shared fixtures: tiny corpora, scripted providers, virtual-clock gateways."""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

import pytest

from surveylens.corpus import Corpus, Provenance, SurveyResponse
from surveylens.gateway import (
    Gateway,
    GatewayConfig,
    RetryPolicy,
    ScriptedProvider,
    ScriptEntry,
    VirtualClock,
)

IMPROVE_QUESTION = "What can we do to improve this course?"


def response(rid: str, text: str, qid: str = "Q3", question_text: str = IMPROVE_QUESTION) -> SurveyResponse:
    return SurveyResponse(id=rid, question_id=qid, text=text, question_text=question_text)


def corpus_of(*pairs: tuple[str, str], source: str = "test") -> Corpus:
    return Corpus(
        tuple(response(rid, text) for rid, text in pairs),
        Provenance(source=source),
    )


# --- scripted payloads, one per task schema ---------------------------------


def binary_args(answer: str, reasoning: str = "because") -> dict[str, Any]:
    return {"reasoning": reasoning, "answer": answer}


def multilabel_args(labels: Sequence[str], reasoning: str = "because") -> dict[str, Any]:
    return {"reasoning": reasoning, "labels": list(labels)}


def multiclass_args(label: str, reasoning: str = "because") -> dict[str, Any]:
    return {"reasoning": reasoning, "label": label}


def sentiment_args(level: str, reasoning: str = "because") -> dict[str, Any]:
    return {"reasoning": reasoning, "sentiment": level}


def extract_args(excerpts: Sequence[str], reasoning: str = "because") -> dict[str, Any]:
    return {"reasoning": reasoning, "excerpts": list(excerpts)}


def themes_args(themes: Sequence[tuple[str, str]], reasoning: str = "because") -> dict[str, Any]:
    return {
        "reasoning": reasoning,
        "themes": [{"title": t, "description": d} for t, d in themes],
    }


def coalesce_args(groups: Sequence[tuple[str, Sequence[str]]], reasoning: str = "because") -> dict[str, Any]:
    return {
        "reasoning": reasoning,
        "groups": [
            {"title": title, "description": "", "members": list(members)}
            for title, members in groups
        ],
    }


def judge_args(failed: Sequence[str] = (), reasoning: str = "because") -> dict[str, Any]:
    from surveylens.tasks.primitives import RUBRIC_CATEGORIES

    args: dict[str, Any] = {"reasoning": reasoning}
    for category in RUBRIC_CATEGORIES:
        args[category] = "yes" if category in failed else "no"
    return args


def keyed(match: str | None, payload: Mapping[str, Any] | None, **kw: Any) -> ScriptEntry:
    return ScriptEntry(payload=dict(payload) if payload is not None else None, match=match, **kw)


def positional(payload: Mapping[str, Any] | None, **kw: Any) -> ScriptEntry:
    return keyed(None, payload, **kw)


def make_gateway(
    entries: Sequence[ScriptEntry],
    **config_kw: Any,
) -> tuple[Gateway, ScriptedProvider, VirtualClock]:
    provider = ScriptedProvider(entries)
    clock = VirtualClock()
    retry_kw = {
        k[len("retry_"):]: config_kw.pop(k)
        for k in list(config_kw)
        if k.startswith("retry_")
    }
    config = GatewayConfig(retry=RetryPolicy(**retry_kw), **config_kw)
    return Gateway(provider, config, clock=clock), provider, clock


def write_script(path, entries: Sequence[ScriptEntry]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for entry in entries:
            row = {"payload": entry.payload}
            if entry.match is not None:
                row["match"] = entry.match
            if entry.status is not None:
                row["status"] = entry.status
            handle.write(json.dumps(row) + "\n")


@pytest.fixture
def small_corpus() -> Corpus:
    return corpus_of(
        ("r1", "More quizzes would help."),
        ("r2", "The videos were excellent."),
        ("r3", "Please add a study guide."),
    )
