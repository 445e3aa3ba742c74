"""Command-line entry point for simulation, validation, evaluation, serving."""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click

from . import annotation, backend as backend_mod, corpus, metrics, simulator
from .spans import SpanNotLocatable


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_dataset(path, offset_unit="char") -> corpus.Dataset:
    try:
        return corpus.load_dataset(path, offset_unit=offset_unit)
    except corpus.CorpusError as exc:
        _fail(str(exc))


def _load_contexts(path) -> list[corpus.TopicContext]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(payload, dict) and ("conversations" in payload or "data" in payload):
        ds = _load_dataset(path)
        return [c.context for c in ds.conversations]
    if isinstance(payload, list):
        return [corpus.TopicContext(**rec) for rec in payload]
    raise click.UsageError("contexts file must be a dataset or a list of context records")


def _make_backend(spec: str, endpoint: str, model: str):
    if spec == "remote":
        if not endpoint or not model:
            raise click.UsageError("--endpoint and --model are required for the remote backend")
        return backend_mod.RemoteChatBackend(endpoint=endpoint, model=model)
    if spec.startswith("scripted:"):
        return backend_mod.load_scripted(spec.split(":", 1)[1])
    raise click.UsageError(f"unknown backend {spec!r} (use 'remote' or 'scripted:FILE')")


@click.group()
def main():
    """Conversational QA simulation, evaluation, and annotation tooling."""


@main.command()
@click.option("--contexts", "contexts_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--backend", "backend_spec", default="remote", show_default=True,
              help="'remote' or 'scripted:FILE'")
@click.option("--endpoint", default="", help="chat-completion endpoint URL (remote backend)")
@click.option("--model", default="", help="model name (remote backend)")
@click.option("--max-turns", type=int, default=12, show_default=True)
@click.option("--parallel", type=int, default=1, show_default=True)
@click.option("--name", "dataset_name", default="simulated", show_default=True)
@click.option("--force", is_flag=True, help="re-simulate contexts with persisted output")
def simulate(contexts_path, out_dir, seed, backend_spec, endpoint, model,
             max_turns, parallel, dataset_name, force):
    """Simulate conversations for every context in a file."""
    contexts = _load_contexts(contexts_path)
    chat_backend = _make_backend(backend_spec, endpoint, model)
    cfg = simulator.SimulationConfig(max_turns=max_turns, seed=seed)
    ds, reports = simulator.run_batch(
        contexts, chat_backend, cfg, parallelism=parallel,
        out_dir=out_dir, dataset_name=dataset_name, force=force,
    )
    corpus.export_dataset(ds, Path(out_dir) / "dataset.json")
    corpus.write_trace_sidecar(ds, Path(out_dir) / "dataset.trace.jsonl")
    for r in reports:
        click.echo(f"{r.conversation.id}\t{len(r.conversation.turns)} turns\t{r.termination}")
    failures = [r for r in reports if r.termination == simulator.TERM_BACKEND_FAILURE]
    if failures:
        _fail(f"{len(failures)} conversation(s) ended in backend failure")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--offset-unit", type=click.Choice(["char", "token"]), default="char")
def validate(dataset_path, offset_unit):
    """Re-run span validation on every answer; nonzero exit on violations."""
    ds = _load_dataset(dataset_path, offset_unit=offset_unit)
    violations = 0
    for conv in ds.conversations:
        for turn in conv.turns:
            if turn.answer.is_cannot_find:
                continue
            try:
                metrics.locate_spans(turn.answer, conv.context)
            except SpanNotLocatable as exc:
                violations += 1
                click.echo(f"{conv.id}#{turn.index}: {exc}", err=True)
    total = sum(len(c.turns) for c in ds.conversations)
    click.echo(f"checked {total} answers in {len(ds.conversations)} conversations")
    if violations:
        _fail(f"{violations} span violation(s)")
    click.echo("all spans valid")


@main.group(name="eval")
def eval_group():
    """Metric reports over a dataset."""


@eval_group.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--compare", "compare_path", type=click.Path(exists=True))
@click.option("--hist-out", type=click.Path(), help="write per-conversation values as JSON")
def coverage(dataset_path, compare_path, hist_out):
    ds = _load_dataset(dataset_path)
    result = metrics.coverage_report(ds)
    click.echo(f"coverage mean={result.mean:.4f} std={result.std:.4f} "
               f"n={len(result.per_conversation)}")
    if hist_out:
        Path(hist_out).write_text(
            json.dumps({cid: v for cid, v in result.per_conversation}, indent=1),
            encoding="utf-8",
        )
    if compare_path:
        other = _load_dataset(compare_path)
        other_res = metrics.coverage_report(other)
        t, p = metrics.coverage_ttest(ds, other)
        click.echo(f"compare  mean={other_res.mean:.4f} std={other_res.std:.4f}")
        click.echo(f"welch t-test: t={t:.4f} p={p:.6g}")


@eval_group.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--compare", "compare_path", type=click.Path(exists=True))
@click.option("--hist-out", type=click.Path())
def flow(dataset_path, compare_path, hist_out):
    ds = _load_dataset(dataset_path)
    result = metrics.flow_report(ds)
    click.echo(f"KRCC mean={result.mean:.4f} n={len(result.per_conversation)} "
               f"undefined={result.n_undefined}")
    if hist_out:
        Path(hist_out).write_text(
            json.dumps({cid: tau for cid, tau, _ in result.per_conversation}, indent=1),
            encoding="utf-8",
        )
    if compare_path:
        other_res = metrics.flow_report(_load_dataset(compare_path))
        click.echo(f"compare KRCC mean={other_res.mean:.4f} "
                   f"n={len(other_res.per_conversation)}")


@eval_group.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--compare", "compare_path", type=click.Path(exists=True))
@click.option("--max-unanswered", type=int, help="apply the unanswered-question cap first")
def stats(dataset_path, compare_path, max_unanswered):
    def show(name, ds):
        if max_unanswered is not None:
            ds = corpus.filter_max_unanswered(ds, max_unanswered)
        s = metrics.dataset_stats(ds)
        click.echo(f"[{name}]")
        click.echo(f"  conversations:        {s.n_conversations}")
        click.echo(f"  questions:            {s.n_questions}")
        click.echo(f"  questions w/ answer:  {s.n_answered}")
        click.echo(f"  avg answer length:    {s.avg_answer_length:.2f}")
        click.echo(f"  avg answers/question: {s.avg_answers_per_question:.2f}")

    show(Path(dataset_path).stem, _load_dataset(dataset_path))
    if compare_path:
        show(Path(compare_path).stem, _load_dataset(compare_path))


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True))
def score(dataset_path, predictions_path):
    """Token-level EM/P/R/F1 of a prediction file against the dataset."""
    ds = _load_dataset(dataset_path)
    preds = metrics.load_predictions(predictions_path)
    try:
        agg = metrics.score_predictions(ds, preds)
    except metrics.UnknownQuestionId as exc:
        _fail(str(exc))
    click.echo(f"n={agg['n_questions']}  Pre.={agg['precision'] * 100:.2f}  "
               f"Rec.={agg['recall'] * 100:.2f}  F1={agg['f1'] * 100:.2f}  "
               f"EM={agg['em'] * 100:.2f}")
    if agg["missing"]:
        click.echo(f"missing predictions for {len(agg['missing'])} question(s)", err=True)


@main.command(name="pair-stats")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True))
def pair_stats_cmd(path_a, path_b):
    """Same/Overlap/Different breakdown of two datasets' answers."""
    res = metrics.pair_stats(_load_dataset(path_a), _load_dataset(path_b))
    if res["total"] == 0:
        _fail("no aligned questions between the two datasets")
    for cls in (metrics.SAME, metrics.OVERLAP, metrics.DIFFERENT):
        click.echo(f"{cls:<10} {res['counts'][cls]:>6}  ({res['percent'][cls]:.1f}%)")
    click.echo(f"{'total':<10} {res['total']:>6}")


@main.command(name="serve-annotation")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True))
@click.option("--quiz", "quiz_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_dir", default="annotation_store", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--admin-token", default="", help="token guarding /report and /export")
def serve_annotation(path_a, path_b, quiz_path, store_dir, port, host, seed, admin_token):
    """Serve the pairwise annotation protocol over HTTP."""
    import uvicorn

    from .service import create_app

    ds_a = _load_dataset(path_a)
    ds_b = _load_dataset(path_b)
    quiz = json.loads(Path(quiz_path).read_text(encoding="utf-8"))
    key = quiz.get("key", quiz)
    store = annotation.AnnotationStore(store_dir)
    if not store.tasks:
        try:
            tasks = annotation.build_tasks(ds_a, ds_b, random.Random(seed))
        except annotation.PairMismatch as exc:
            _fail(str(exc))
        store.save_tasks(tasks)
    app = create_app(store, quiz_key=key, admin_token=admin_token)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
