"""Command-line interface.

Exit codes: 0 success; 1 usage/configuration error; 2 partial failure
(some items failed; an error manifest was written next to the outputs).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import report
from .config import AppConfig, ConfigError, load_config
from .corpus import (
    Corpus,
    CorpusError,
    clean,
    export_corpus,
    filter_questions,
    load_annotation_set,
    load_corpus,
    sample,
)
from .evaluation import (
    LabelMatrix,
    agreement_matrix,
    binary_report,
    consensus,
    judge_extraction_batch,
    multilabel_report,
    rubric_error_rates,
    sentiment_report,
    verify_excerpts,
)
from .gateway import (
    Gateway,
    HttpProvider,
    ScriptedProvider,
    UsageLedger,
    cost_report,
    write_cost_report_csv,
)
from .tasks import (
    SENTIMENT_LEVELS,
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
from .tasks.primitives import Excerpt
from .workflows import (
    PRESETS,
    WorkflowContext,
    read_jsonl,
    run_bottom_up_themes,
    run_preset,
    write_jsonl,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2


class CliError(Exception):
    """Usage or configuration problem; exits 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> Any:  # argparse would exit(2)
        raise CliError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="surveylens", description="Quantify free-text survey feedback with LLM workflows.")
    parser.add_argument("--config", help="path to a TOML config file")
    parser.add_argument(
        "--provider",
        default="live",
        help='"live" for the configured HTTP endpoint, or "mock:<script.jsonl>"',
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for sampling")
    parser.add_argument("--out", help="output directory (default from config)")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="load, clean, and re-export a corpus")
    ingest.add_argument("--input", required=True)
    ingest.add_argument("--format", choices=("csv", "jsonl"))
    ingest.add_argument("--questions", nargs="+", help="keep only these question ids")
    ingest.add_argument("--sample", type=int, help="responses to keep per question")

    classify = sub.add_parser("classify", help="classification tasks")
    classify_sub = classify.add_subparsers(dest="task", required=True)
    for task in ("binary", "multilabel", "multiclass"):
        p = classify_sub.add_parser(task)
        p.add_argument("--input", required=True, help="corpus csv/jsonl")
        if task == "binary":
            p.add_argument("--criterion", required=True)
        else:
            p.add_argument("--tagset", help="tagset json (default: bundled course tags)")

    extract = sub.add_parser("extract", help="pull goal-relevant excerpts out of comments")
    extract.add_argument("--input", required=True)
    extract.add_argument("--goal", required=True)

    sentiment = sub.add_parser("sentiment", help="five-level sentiment per comment")
    sentiment.add_argument("--input", required=True)

    themes = sub.add_parser("themes", help="two-step thematic analysis over a corpus")
    themes.add_argument("--input", required=True)

    workflow = sub.add_parser("workflow", help="run a composed workflow")
    workflow_sub = workflow.add_subparsers(dest="action", required=True)
    run = workflow_sub.add_parser("run")
    run.add_argument("preset", choices=sorted(PRESETS))
    run.add_argument("--input", required=True)
    run.add_argument("--tagset")
    run.add_argument("--criterion")
    run.add_argument("--goal")
    run.add_argument("--focus-tag")
    run.add_argument("--prior", help="jsonl of prior multilabel rows to reuse")
    run.add_argument("--no-resume", action="store_true", help="ignore cached stage artifacts")

    evaluate = sub.add_parser("eval", help="score predictions against ground truth")
    eval_sub = evaluate.add_subparsers(dest="task", required=True)
    ml = eval_sub.add_parser("multilabel")
    ml.add_argument("--pred", required=True, help='jsonl rows of {"id","labels"}')
    ml.add_argument("--truth", required=True)
    ml.add_argument("--tagset")
    bi = eval_sub.add_parser("binary")
    bi.add_argument("--pred", required=True, help='jsonl rows of {"id","answer"}')
    bi.add_argument("--truth", required=True)
    se = eval_sub.add_parser("sentiment")
    se.add_argument("--pred", required=True, help='jsonl rows of {"id","label"}')
    se.add_argument("--truth", required=True)
    ex = eval_sub.add_parser("extraction")
    ex.add_argument("--corpus", required=True)
    ex.add_argument("--excerpts", required=True, help="jsonl rows with source_id and text")
    ex.add_argument("--goal", required=True)

    agreement = sub.add_parser("agreement", help="pairwise inter-rater agreement matrix")
    agreement.add_argument("--annotations", nargs="+", required=True)
    agreement.add_argument("--model-raters", nargs="*", default=[],
                           help="annotator ids that are models, for the human-pairs average")

    cons = sub.add_parser("consensus", help="aggregate annotators into ground truth")
    cons.add_argument("--annotations", nargs="+", required=True)
    cons.add_argument("--mode", choices=("labels", "rows"), default="labels")
    cons.add_argument("--tagset")

    verify = sub.add_parser("verify-excerpts", help="check excerpts for hallucination")
    verify.add_argument("--excerpts", required=True)
    verify.add_argument("--corpus", required=True)
    verify.add_argument("--threshold", type=float)

    cost = sub.add_parser("cost-report", help="aggregate a usage ledger into costs")
    cost.add_argument("--ledger", required=True, help="usage csv")
    cost.add_argument("--per", type=int, default=100)

    return parser


def _make_gateway(args: argparse.Namespace, config: AppConfig) -> Gateway:
    spec = args.provider
    if spec == "live":
        provider: Any = HttpProvider(
            config.gateway.base_url, config.gateway.api_key_env, config.gateway.request_timeout
        )
    elif spec.startswith("mock:"):
        script = Path(spec[len("mock:"):])
        if not script.is_file():
            raise CliError(f"mock script not found: {script}")
        provider = ScriptedProvider.from_file(script)
    else:
        raise CliError(f'--provider must be "live" or "mock:<script>", got {spec!r}')
    ledger = UsageLedger(config.pricing)
    return Gateway(provider, config.gateway, ledger=ledger)


def _out_dir(args: argparse.Namespace, config: AppConfig) -> Path:
    out = Path(args.out) if args.out else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus(path: str, format: str | None = None) -> Corpus:
    return load_corpus(path, format)


def _tagset_from(args: argparse.Namespace, config: AppConfig) -> TagSet:
    path = getattr(args, "tagset", None)
    if path:
        return load_tagset(path)
    return config.tagset


def _finish(out: Path, failures: Sequence[TaskFailure]) -> int:
    if failures:
        write_jsonl([f.as_row() for f in failures], out / "errors.jsonl")
        print(f"{len(failures)} item(s) failed; see {out / 'errors.jsonl'}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_ingest(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    corpus = _load_corpus(args.input, args.format)
    corpus = clean(corpus, config.sentinels)
    if args.questions:
        corpus = filter_questions(corpus, args.questions)
    if args.sample is not None:
        corpus = sample(corpus, args.sample, args.seed)
    target = out / "corpus.jsonl"
    sidecar = export_corpus(corpus, target, "jsonl")
    removed = corpus.provenance.removed_total
    print(f"wrote {target} ({len(corpus)} responses, {removed} removed by cleaning)")
    print(f"wrote {sidecar}")
    return EXIT_OK


def _cmd_classify(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    corpus = _load_corpus(args.input)
    gateway = _make_gateway(args, config)
    templates = config.load_templates()
    if args.task == "binary":
        results = classify_binary(
            corpus, args.criterion, gateway,
            model_id=config.primary_model, templates=templates,
        )
        rows = [r.as_row() for r in results if not isinstance(r, TaskFailure)]
        counts = {"yes": 0, "no": 0}
        for row in rows:
            counts[row["answer"]] += 1
        write_jsonl(rows, out / "binary_results.jsonl")
    elif args.task == "multilabel":
        tagset = _tagset_from(args, config)
        results = classify_multilabel(
            corpus, tagset, gateway, model_id=config.primary_model, templates=templates
        )
        rows = [r.as_row(tagset) for r in results if not isinstance(r, TaskFailure)]
        counts = {name: 0 for name in tagset.names}
        for row in rows:
            for label in row["labels"]:
                counts[label] += 1
        write_jsonl(rows, out / "multilabel_results.jsonl")
    else:
        tagset = _tagset_from(args, config)
        results = classify_multiclass(
            corpus, tagset, gateway, model_id=config.primary_model, templates=templates
        )
        rows = [r.as_row() for r in results if not isinstance(r, TaskFailure)]
        counts = {name: 0 for name in tagset.names}
        for row in rows:
            counts[row["label"]] += 1
        write_jsonl(rows, out / "multiclass_results.jsonl")

    _write_counts(out, counts, f"{args.task} counts")
    gateway.ledger.export_csv(out / "usage.csv")
    print(f"classified {len(rows)} of {len(corpus)} responses")
    return _finish(out, [r for r in results if isinstance(r, TaskFailure)])


def _write_counts(out: Path, counts: Mapping[str, int], title: str) -> None:
    lines = ["key,count"]
    for key, value in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        escaped = '"' + key.replace('"', '""') + '"' if ("," in key or '"' in key) else key
        lines.append(f"{escaped},{value}")
    (out / "counts.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if counts:
        report.render_counts_figure(counts, out / "counts.png", title=title)


def _cmd_extract(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    corpus = _load_corpus(args.input)
    gateway = _make_gateway(args, config)
    results = extract_excerpts(
        corpus, args.goal, gateway,
        model_id=config.primary_model, templates=config.load_templates(),
    )
    rows = []
    for result in results:
        if isinstance(result, TaskFailure):
            continue
        for index, excerpt in enumerate(result.excerpts):
            rows.append(
                {
                    "id": f"{result.id}#{index}",
                    "source_id": result.id,
                    "text": excerpt.text,
                    "span": list(excerpt.char_span) if excerpt.char_span else None,
                }
            )
    write_jsonl(rows, out / "excerpts.jsonl")
    gateway.ledger.export_csv(out / "usage.csv")
    print(f"extracted {len(rows)} excerpts from {len(corpus)} responses")
    return _finish(out, [r for r in results if isinstance(r, TaskFailure)])


def _cmd_sentiment(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    corpus = _load_corpus(args.input)
    gateway = _make_gateway(args, config)
    results = rate_sentiment(
        corpus, gateway, model_id=config.primary_model, templates=config.load_templates()
    )
    rows = [r.as_row() for r in results if not isinstance(r, TaskFailure)]
    counts = {level: 0 for level in SENTIMENT_LEVELS}
    for row in rows:
        counts[row["level"]] += 1
    write_jsonl(rows, out / "sentiment_results.jsonl")
    _write_counts(out, counts, "sentiment levels")
    gateway.ledger.export_csv(out / "usage.csv")
    print(f"rated {len(rows)} of {len(corpus)} responses")
    return _finish(out, [r for r in results if isinstance(r, TaskFailure)])


def _cmd_themes(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    corpus = _load_corpus(args.input)
    gateway = _make_gateway(args, config)
    ctx = WorkflowContext(
        gateway=gateway,
        tagset=config.tagset,
        templates=config.load_templates(),
        model_id=config.primary_model,
        context_budget_tokens=config.context_budget_tokens,
        overhead_tokens=config.overhead_tokens,
    )
    run = run_bottom_up_themes(corpus, ctx, out / "themes-run")
    final_rows = run.final_rows()
    write_jsonl(final_rows, out / "themes.jsonl")
    lines = ["title,count"]
    for row in sorted(final_rows, key=lambda r: (-r["count"], r["title"])):
        title = row["title"]
        escaped = '"' + title.replace('"', '""') + '"' if ("," in title or '"' in title) else title
        lines.append(f"{escaped},{row['count']}")
    (out / "themes.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if run.primary_counts:
        report.render_counts_figure(run.primary_counts, out / "themes.png", title="themes")
    print(f"derived {len(final_rows)} themes from {len(corpus)} responses")
    if run.errors:
        print(f"{len(run.errors)} item(s) failed; see {run.run_dir / 'errors.jsonl'}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_workflow(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    corpus = _load_corpus(args.input)
    gateway = _make_gateway(args, config)
    extra: dict[str, Any] = {}
    if args.criterion:
        extra["criterion"] = args.criterion
    if args.goal:
        extra["goal"] = args.goal
    if args.focus_tag:
        extra["focus_tag"] = args.focus_tag
    if args.prior:
        extra["prior_multilabel"] = read_jsonl(Path(args.prior))
    ctx = WorkflowContext(
        gateway=gateway,
        tagset=_tagset_from(args, config),
        templates=config.load_templates(),
        model_id=config.primary_model,
        context_budget_tokens=config.context_budget_tokens,
        overhead_tokens=config.overhead_tokens,
        extra=extra,
    )
    run_dir = out / args.preset
    run = run_preset(args.preset, corpus, ctx, run_dir, resume=not args.no_resume)
    for record in run.stages:
        print(
            f"stage {record.name}: {record.status}, "
            f"{record.input_count} -> {record.output_count} rows, "
            f"{record.error_count} error(s)"
        )
    print(f"run directory: {run.run_dir}")
    if run.errors:
        print(f"{len(run.errors)} item(s) failed; see {run.run_dir / 'errors.jsonl'}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _load_label_rows(path: str) -> list[tuple[str, frozenset[str]]]:
    annotations = load_annotation_set(path)
    return sorted(annotations.rows.items())


def _cmd_eval(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    if args.task == "multilabel":
        tagset = _tagset_from(args, config)
        pred_rows = _load_label_rows(args.pred)
        truth_rows = _load_label_rows(args.truth)
        pred = LabelMatrix.from_sets(pred_rows, tagset.names)
        truth = LabelMatrix.from_sets(truth_rows, tagset.names)
        metric_report = multilabel_report(pred, truth, verbose=True)
        report.write_metric_report_csv(metric_report, out / "per_tag.csv", out / "summary.csv")
        report.render_per_tag_figure(metric_report, out / "per_tag.png")
        print(
            f"jaccard {metric_report.mean_jaccard:.4f}, "
            f"macro F1 {metric_report.macro_f1:.4f}, "
            f"micro F1 {metric_report.micro_f1:.4f} over {metric_report.rows} rows"
        )
        for flag in metric_report.flags:
            print(f"note: {flag}", file=sys.stderr)
        return EXIT_OK
    if args.task == "binary":
        pred = {r["id"]: r["answer"] for r in read_jsonl(Path(args.pred))}
        truth = {r["id"]: r["answer"] for r in read_jsonl(Path(args.truth))}
        result = binary_report(pred, truth)
        report.write_binary_report_csv(result, out / "binary_report.csv")
        print(
            f"accuracy {result.accuracy:.4f}, precision {result.precision:.4f}, "
            f"recall {result.recall:.4f}, f1 {result.f1:.4f}"
        )
        return EXIT_OK
    if args.task == "sentiment":
        pred = _load_sentiment_file(Path(args.pred))
        truth = _load_sentiment_file(Path(args.truth))
        result = sentiment_report(pred, truth)
        report.write_sentiment_report_csv(result, out / "sentiment_report.csv")
        print(
            f"accuracy {result.accuracy:.4f}, macro F1 {result.macro_f1:.4f} "
            f"over {sum(m.support for m in result.per_class)} items"
        )
        return EXIT_OK
    # extraction: LLM-judged rubric
    corpus = _load_corpus(args.corpus)
    excerpt_rows = read_jsonl(Path(args.excerpts))
    by_source: dict[str, list[str]] = {}
    for row in excerpt_rows:
        by_source.setdefault(row["source_id"], []).append(row["text"])
    items = [(corpus.by_id(source_id), texts) for source_id, texts in sorted(by_source.items())]
    gateway = _make_gateway(args, config)
    verdicts = judge_extraction_batch(
        items, args.goal, gateway,
        model_id=config.judge_model, templates=config.load_templates(),
    )
    ok = [v for v in verdicts if not isinstance(v, TaskFailure)]
    write_jsonl([v.as_row() for v in ok], out / "rubric_verdicts.jsonl")
    if ok:
        rates = rubric_error_rates(ok)
        report.write_rubric_rates_csv(rates, out / "rubric_rates.csv")
        for category, rate in rates:
            print(f"{category}: {rate:.2f}%")
    gateway.ledger.export_csv(out / "usage.csv")
    return _finish(out, [v for v in verdicts if isinstance(v, TaskFailure)])


def _load_sentiment_file(path: Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for row in read_jsonl(path):
        value = row.get("label") or row.get("level") or row.get("sentiment")
        if value in SENTIMENT_LEVELS:
            value = collapse_sentiment(value)
        out[row["id"]] = value
    return out


def _cmd_agreement(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    raters = [load_annotation_set(path) for path in args.annotations]
    matrix = agreement_matrix(raters)
    model_raters = set(args.model_raters)
    unknown = model_raters - set(matrix.rater_ids)
    if unknown:
        raise CliError(f"--model-raters names unknown annotator(s): {sorted(unknown)}")
    subgroups: dict[str, Sequence[str]] = {}
    humans = [r for r in matrix.rater_ids if r not in model_raters]
    if model_raters and len(humans) >= 2:
        subgroups["human pairs"] = humans
    subgroups["all pairs"] = matrix.rater_ids
    report.write_agreement_csv(matrix, out / "agreement.csv", subgroups)
    report.render_agreement_figure(matrix, out / "agreement.png")
    for name, rater_ids in subgroups.items():
        print(f"{name} average: {matrix.subgroup_average(rater_ids):.2f}")
    return EXIT_OK


def _cmd_consensus(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    annotations = [load_annotation_set(path) for path in args.annotations]
    tagset = _tagset_from(args, config)
    result = consensus(annotations, tagset.names, args.mode)
    rows = [
        {"id": row_id, "labels": tagset.sort_labels(labels)}
        for row_id, labels in result.truth.to_sets()
    ]
    write_jsonl(rows, out / "consensus_truth.jsonl")
    summary = {
        "mode": result.mode,
        "annotators": result.annotator_count,
        "retained_rows": len(result.retained_ids),
        "total_rows": len(result.votes),
    }
    (out / "consensus_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"{args.mode} consensus over {result.annotator_count} annotators: "
        f"retained {len(result.retained_ids)} of {len(result.votes)} rows"
    )
    return EXIT_OK


def _cmd_verify_excerpts(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    corpus = _load_corpus(args.corpus)
    threshold = args.threshold if args.threshold is not None else config.minor_edit_threshold
    excerpts = [
        Excerpt(row["source_id"], row["text"])
        for row in read_jsonl(Path(args.excerpts))
    ]
    fidelity = verify_excerpts(excerpts, corpus, threshold)
    write_jsonl([v.as_row() for v in fidelity.verdicts], out / "fidelity.jsonl")
    report.write_fidelity_csv(fidelity, out / "fidelity.csv")
    print(
        f"{fidelity.total} excerpts: {fidelity.count('verbatim')} verbatim, "
        f"{fidelity.count('minor_edit')} minor edits, "
        f"{fidelity.hallucinated} hallucinations "
        f"({fidelity.hallucination_rate:.2f}%)"
    )
    return EXIT_OK


def _cmd_cost_report(args: argparse.Namespace, config: AppConfig) -> int:
    out = _out_dir(args, config)
    ledger = UsageLedger.import_csv(args.ledger, config.pricing)
    rows = cost_report(ledger, per_n=args.per)
    write_cost_report_csv(rows, out / "cost_report.csv", per_n=args.per)
    for row in rows:
        print(
            f"{row.task_kind}/{row.model_id}: {row.calls} calls, "
            f"total {row.total_cost}, per {args.per}: {row.cost_per_n}"
        )
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "classify": _cmd_classify,
    "extract": _cmd_extract,
    "sentiment": _cmd_sentiment,
    "themes": _cmd_themes,
    "workflow": _cmd_workflow,
    "eval": _cmd_eval,
    "agreement": _cmd_agreement,
    "consensus": _cmd_consensus,
    "verify-excerpts": _cmd_verify_excerpts,
    "cost-report": _cmd_cost_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, CorpusError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError as exc:
        print(f"error: missing or unknown key {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
