"""Workflow engine: ordered stages over jsonl-able row state.

Each stage consumes and produces plain dict rows, so every intermediate
result can be persisted, diffed, and reused.  A stage is skipped on
re-run when the content hash of its inputs + workflow config matches the
cached run (LLM calls are the cost center).  Manifests are fully
deterministic: timestamps and reuse status live in a separate timing
file so repeated runs produce byte-identical goldens.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from ..corpus import Corpus
from ..gateway import Gateway, UsageEntry
from ..tasks.prompts import TemplateSet, default_templates
from ..tasks.tags import DEFAULT_TAGSET, TagSet

Rows = list[dict[str, Any]]


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(value: Any) -> str:
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def write_jsonl(rows: Sequence[Mapping[str, Any]], path: Path) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(canonical_json(row) + "\n")


def read_jsonl(path: Path) -> Rows:
    rows: Rows = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                rows.append(json.loads(line))
    return rows


@dataclass(frozen=True)
class StageOutcome:
    rows: Rows
    errors: Rows = field(default_factory=list)
    counts: dict[str, int] | None = None
    detail: dict[str, Any] = field(default_factory=dict)
    # A stage can declare it produced rows without doing model work
    # (e.g. adopting prior results), independent of cache reuse.
    reused: bool = False


@dataclass(frozen=True)
class Stage:
    name: str
    run: Callable[["WorkflowContext", Rows], StageOutcome]


@dataclass(frozen=True)
class StageRecord:
    name: str
    status: str  # "completed" | "reused"
    input_count: int
    output_count: int
    artifact: str
    error_count: int
    detail: dict[str, Any]


@dataclass
class WorkflowContext:
    gateway: Gateway
    tagset: TagSet = DEFAULT_TAGSET
    templates: TemplateSet | None = None
    model_id: str = "gpt-4"
    context_budget_tokens: int = 8192
    overhead_tokens: int = 512
    # Preset-specific knobs: criterion, goal, focus_tag, prior rows...
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.templates is None:
            self.templates = default_templates()

    def fingerprint(self) -> dict[str, Any]:
        """Everything that changes model behavior, for cache keying.

        Prior-result rows are part of it; live objects like the gateway
        are not.
        """
        assert self.templates is not None
        extra = {k: v for k, v in self.extra.items()}
        return {
            "model_id": self.model_id,
            "tagset": [[t.name, t.description] for t in self.tagset.tags],
            "catch_all": self.tagset.catch_all,
            "templates": self.templates.fingerprint(),
            "context_budget_tokens": self.context_budget_tokens,
            "overhead_tokens": self.overhead_tokens,
            "extra": extra,
        }


@dataclass(frozen=True)
class WorkflowRun:
    workflow: str
    run_dir: Path
    config_hash: str
    stages: tuple[StageRecord, ...]
    counts: dict[str, dict[str, int]]  # stage name -> count table
    errors: Rows
    usage: tuple[UsageEntry, ...]
    started: str
    finished: str

    @property
    def primary_counts(self) -> dict[str, int]:
        """The last count table a stage produced (the workflow's output)."""
        table: dict[str, int] = {}
        for record in self.stages:
            if record.name in self.counts:
                table = self.counts[record.name]
        return table

    def final_rows(self) -> Rows:
        if not self.stages:
            return []
        return read_jsonl(self.run_dir / self.stages[-1].artifact)


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def corpus_rows(corpus: Corpus) -> Rows:
    return [
        {
            "id": r.id,
            "question_id": r.question_id,
            "question_text": r.question_text,
            "text": r.text,
        }
        for r in corpus
    ]


def run_workflow(
    name: str,
    stages: Sequence[Stage],
    initial_rows: Rows,
    ctx: WorkflowContext,
    run_dir: str | Path,
    resume: bool = True,
) -> WorkflowRun:
    """Execute stages in order, persisting each stage's rows as jsonl.

    Input rows are canonically sorted by id first, so corpus shuffles
    cannot perturb artifacts.  A stage whose content hash matches the
    cached previous run is reused from its artifact.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    started = _utc_now()
    usage_start = len(ctx.gateway.ledger.entries)

    cache_path = run_dir / "cache.json"
    cache: dict[str, Any] = {}
    if resume and cache_path.exists():
        cache = json.loads(cache_path.read_text(encoding="utf-8"))

    fingerprint = ctx.fingerprint()
    config_hash = content_hash(fingerprint)

    rows: Rows = sorted(initial_rows, key=lambda r: str(r.get("id", "")))
    records: list[StageRecord] = []
    all_errors: Rows = []
    counts_tables: dict[str, dict[str, int]] = {}

    for index, stage in enumerate(stages):
        key = content_hash({"stage": stage.name, "config": fingerprint, "inputs": rows})
        artifact_name = f"stage_{index:02d}_{_slug(stage.name)}.jsonl"
        artifact_path = run_dir / artifact_name
        cached = cache.get(stage.name)
        if resume and cached and cached.get("key") == key and artifact_path.exists():
            outcome = StageOutcome(
                rows=read_jsonl(artifact_path),
                errors=list(cached.get("errors", [])),
                counts=cached.get("counts"),
                detail=dict(cached.get("detail", {})),
            )
            status = "reused"
        else:
            outcome = stage.run(ctx, rows)
            write_jsonl(outcome.rows, artifact_path)
            status = "reused" if outcome.reused else "completed"
        cache[stage.name] = {
            "key": key,
            "artifact": artifact_name,
            "errors": outcome.errors,
            "counts": outcome.counts,
            "detail": outcome.detail,
        }
        records.append(
            StageRecord(
                name=stage.name,
                status=status,
                input_count=len(rows),
                output_count=len(outcome.rows),
                artifact=artifact_name,
                error_count=len(outcome.errors),
                detail=outcome.detail,
            )
        )
        all_errors.extend({"stage": stage.name, **error} for error in outcome.errors)
        if outcome.counts is not None:
            counts_tables[stage.name] = dict(outcome.counts)
        rows = outcome.rows

    cache_path.write_text(
        json.dumps(cache, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    write_jsonl(all_errors, run_dir / "errors.jsonl")

    manifest = {
        "workflow": name,
        "config_hash": config_hash,
        "stages": [
            {
                "name": r.name,
                "input_count": r.input_count,
                "output_count": r.output_count,
                "artifact": r.artifact,
                "error_count": r.error_count,
                "detail": r.detail,
            }
            for r in records
        ],
        "counts": counts_tables,
    }
    (run_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )

    finished = _utc_now()
    (run_dir / "timing.json").write_text(
        json.dumps(
            {
                "started": started,
                "finished": finished,
                "stage_status": {r.name: r.status for r in records},
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    usage = tuple(
        sorted(
            ctx.gateway.ledger.entries[usage_start:],
            key=lambda e: (e.task_kind, e.model_id, e.prompt_tokens, e.completion_tokens),
        )
    )
    run = WorkflowRun(
        workflow=name,
        run_dir=run_dir,
        config_hash=config_hash,
        stages=tuple(records),
        counts=counts_tables,
        errors=all_errors,
        usage=usage,
        started=started,
        finished=finished,
    )
    _write_counts_csv(run.primary_counts, run_dir / "counts.csv")
    _write_usage_csv(usage, run_dir / "usage.csv")
    _render_counts_figure(run)
    return run


def _write_counts_csv(counts: Mapping[str, int], path: Path) -> None:
    lines = ["key,count"]
    for key, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        escaped = '"' + key.replace('"', '""') + '"' if ("," in key or '"' in key) else key
        lines.append(f"{escaped},{count}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_usage_csv(usage: Sequence[UsageEntry], path: Path) -> None:
    lines = ["task_kind,model_id,prompt_tokens,completion_tokens"]
    for entry in usage:
        lines.append(
            f"{entry.task_kind},{entry.model_id},{entry.prompt_tokens},{entry.completion_tokens}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _render_counts_figure(run: WorkflowRun) -> None:
    counts = run.primary_counts
    if not counts:
        return
    from ..report import render_counts_figure

    render_counts_figure(counts, run.run_dir / "counts.png", title=run.workflow)
