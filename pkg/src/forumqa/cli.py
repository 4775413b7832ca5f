"""Command-line entry point.

Verbs: ingest, preprocess, lda, segment, dataset, index, ask, eval, serve,
run. Standalone verbs take explicit paths; `run <stage>` / `run all` use
the pipeline config with hash-checked staleness.

Exit codes: 0 success, 2 validation failure, 3 stale artifact, 4 I/O.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from . import dataset as ds
from . import evaluation, lda, pipeline, preprocess, retriever, segment
from .artifacts import StaleArtifactError
from .config import STAGES, PipelineConfig
from .ingest import EmptyCorpusError, FormatError, ParseReport, clean_document, parse_post_dump
from .reader import format_answers, predictions_to_json
from .segment import read_paragraphs

EXIT_VALIDATION = 2
EXIT_STALE = 3
EXIT_IO = 4

logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StaleArtifactError as exc:
            click.echo(f"stale artifact: {exc}", err=True)
            sys.exit(EXIT_STALE)
        except (ds.DatasetError, FormatError, EmptyCorpusError, ValueError) as exc:
            click.echo(f"validation failure: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(EXIT_IO)

    return wrapper


def _load_config(ctx: click.Context) -> PipelineConfig:
    path = ctx.obj.get("config_path")
    if path is None:
        raise click.UsageError("this command requires --config PATH")
    return PipelineConfig.load(path)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Pipeline config JSON (required for run/serve).")
@click.pass_context
def main(ctx: click.Context, config_path: str | None):
    """Forum corpus -> topic paragraphs -> QA dataset -> retriever/reader."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@main.command()
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv", "html"]), required=True)
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--repeat-threshold", type=int, default=3, show_default=True)
@handle_errors
def ingest(fmt: str, in_path: str, out_path: str, repeat_threshold: int):
    """Parse a saved forum export into the canonical corpus JSONL."""
    report = ParseReport()
    posts = []
    for post in parse_post_dump(Path(in_path).read_bytes(), fmt, report=report):
        body = clean_document(post.body, repeat_threshold)
        if not body.strip():
            report.skip(f"post {post.post_id}: empty after cleaning")
            continue
        post.body = body
        posts.append(post)
    if not posts:
        raise EmptyCorpusError("every post was empty after cleaning")
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text("".join(p.to_json() + "\n" for p in posts), "utf-8")
    click.echo(f"wrote {len(posts)} posts to {out_path} "
               f"({report.records_skipped} records skipped)")


@main.command("preprocess")
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out-bow", type=click.Path(), required=True)
@click.option("--out-vocab", type=click.Path(), required=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@click.option("--min-df", type=int, default=5, show_default=True)
@click.option("--max-df", type=float, default=0.5, show_default=True)
@handle_errors
def preprocess_cmd(in_path, out_bow, out_vocab, stopwords_path, min_df, max_df):
    """Corpus JSONL -> bag-of-words JSONL + vocabulary TSV."""
    config = PipelineConfig(
        workdir=str(Path(out_bow).parent),
        stopwords_path=stopwords_path, min_df=min_df, max_df_fraction=max_df,
    )
    pconfig = pipeline._preprocess_config(config)
    posts = pipeline.load_corpus(Path(in_path))
    tokenized = [(p.post_id, preprocess.preprocess(p.body, pconfig)) for p in posts]
    vocab = preprocess.build_vocabulary([t for _, t in tokenized], min_df, max_df)
    Path(out_vocab).write_text(vocab.to_tsv(), "utf-8")
    bows = [preprocess.vectorize(pid, toks, vocab) for pid, toks in tokenized]
    Path(out_bow).write_text("".join(b.to_json() + "\n" for b in bows), "utf-8")
    click.echo(f"V={len(vocab)}, {len(bows)} documents")


@main.group()
def lda_group():
    """Fit LDA / extract aspects."""


main.add_command(lda_group, name="lda")


@lda_group.command("fit")
@click.option("--bow", type=click.Path(exists=True), required=True)
@click.option("--vocab", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=35, show_default=True)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=0.01, show_default=True)
@click.option("--iters", type=int, default=1000, show_default=True)
@click.option("--burn-in", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_errors
def lda_fit(bow, vocab, k, alpha, beta, iters, burn_in, seed, out_path):
    """Fit the topic model by collapsed Gibbs sampling."""
    vocabulary = preprocess.Vocabulary.from_tsv(Path(vocab).read_text("utf-8"))
    bows = list(preprocess.iter_bow_file(Path(bow).read_text("utf-8").splitlines()))
    config = lda.LdaConfig(
        n_topics=k, alpha=alpha, beta=beta, iterations=iters, burn_in=burn_in, seed=seed
    )
    model = lda.fit_lda(bows, len(vocabulary), config, vocab_hash=vocabulary.content_hash())
    Path(out_path).write_text(model.to_json(), "utf-8")
    click.echo(
        f"fitted K={k} over {len(model.doc_ids)} docs "
        f"({len(model.skipped_doc_ids)} skipped empty); wrote {out_path}"
    )


@lda_group.command("aspects")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--vocab", type=click.Path(exists=True), required=True)
@click.option("--corpus", type=click.Path(exists=True), required=True)
@click.option("--per-topic", type=int, default=9, show_default=True)
@click.option("--bigram-threshold", type=int, default=25, show_default=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@handle_errors
def lda_aspects(model_path, vocab, corpus, per_topic, bigram_threshold, stopwords_path):
    """Extract per-topic aspects and store them in the model file."""
    model = lda.TopicModel.from_json(Path(model_path).read_text("utf-8"))
    vocabulary = preprocess.Vocabulary.from_tsv(Path(vocab).read_text("utf-8"))
    if stopwords_path:
        stopwords = preprocess.parse_stopwords(Path(stopwords_path).read_text("utf-8"))
    else:
        stopwords = preprocess.load_default_stopwords()
    posts = pipeline.load_corpus(Path(corpus))
    tokenized = [preprocess.tokenize(p.body, stopwords) for p in posts]
    model.aspects = lda.extract_aspects(
        model, vocabulary, tokenized, per_topic, bigram_threshold
    )
    Path(model_path).write_text(model.to_json(), "utf-8")
    for a in model.aspects:
        click.echo(f"topic {a.topic_id}: {', '.join(a.aspects)}")


@main.command("segment")
@click.option("--corpus", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--max-words", type=int, default=385, show_default=True)
@click.option("--overlap", type=int, default=50, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_errors
def segment_cmd(corpus, model_path, max_words, overlap, out_path):
    """Group posts by dominant topic into bounded paragraphs."""
    posts = pipeline.load_corpus(Path(corpus))
    model = lda.TopicModel.from_json(Path(model_path).read_text("utf-8"))
    report = segment.SegmentReport()
    paragraphs = segment.segment(posts, model, max_words, overlap, report)
    Path(out_path).write_text(segment.write_paragraphs(paragraphs), "utf-8")
    click.echo(
        f"{report.paragraphs} paragraphs covering {report.posts_covered} posts "
        f"({len(report.posts_without_topic)} posts had no topic)"
    )


@main.group("dataset")
def dataset_group():
    """Propose, validate, inspect, and split the QA dataset."""


@dataset_group.command("propose")
@click.option("--paragraphs", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--templates", "templates_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_errors
def dataset_propose(paragraphs, model_path, templates_path, out_path):
    """Draft one question per aspect for every paragraph."""
    model = lda.TopicModel.from_json(Path(model_path).read_text("utf-8"))
    paras = read_paragraphs(Path(paragraphs).read_text("utf-8"))
    aspects_by_topic = {a.topic_id: a for a in model.aspects}
    templates = (
        ds.parse_templates(Path(templates_path).read_text("utf-8"))
        if templates_path else ds.load_default_templates()
    )
    articles: dict[int, ds.Article] = {}
    n_questions = 0
    for para in paras:
        aspects = aspects_by_topic.get(para.topic_id)
        qas = ds.propose_questions(para, aspects, templates) if aspects else []
        n_questions += len(qas)
        articles.setdefault(para.topic_id, ds.Article(title=f"topic-{para.topic_id}")) \
            .paragraphs.append(ds.DatasetParagraph(
                paragraph_id=para.paragraph_id, topic_id=para.topic_id,
                context=para.context, qas=qas))
    dataset = ds.QADataset(articles=[articles[k] for k in sorted(articles)])
    Path(out_path).write_text(dataset.to_json(), "utf-8")
    click.echo(f"proposed {n_questions} draft questions; wrote {out_path}")


@dataset_group.command("validate")
@click.argument("dataset_path", type=click.Path(exists=True))
@handle_errors
def dataset_validate(dataset_path):
    """Report every invariant violation; exit 2 if any."""
    dataset = ds.QADataset.from_json(Path(dataset_path).read_text("utf-8"))
    violations = ds.validate(dataset)
    for v in violations:
        click.echo(f"{v.qid}: {v.reason}")
    if violations:
        click.echo(f"{len(violations)} violations", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo("dataset valid")


@dataset_group.command("stats")
@click.argument("dataset_path", type=click.Path(exists=True))
@handle_errors
def dataset_stats_cmd(dataset_path):
    """Dataset statistics in the published row schema."""
    dataset = ds.QADataset.from_json(Path(dataset_path).read_text("utf-8"))
    click.echo(json.dumps(ds.dataset_stats(dataset), indent=1))


@dataset_group.command("split")
@click.argument("dataset_path", type=click.Path(exists=True))
@click.option("--fraction", type=float, default=0.7, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-train", type=click.Path(), required=True)
@click.option("--out-eval", type=click.Path(), required=True)
@handle_errors
def dataset_split(dataset_path, fraction, seed, out_train, out_eval):
    """Stratified whole-question train/eval split."""
    dataset = ds.QADataset.from_json(Path(dataset_path).read_text("utf-8"))
    train, eval_split, warnings = ds.split_train_eval(dataset, fraction, seed)
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    Path(out_train).write_text(train.to_json(), "utf-8")
    Path(out_eval).write_text(eval_split.to_json(), "utf-8")
    n = lambda d: sum(1 for _ in d.iter_qas())  # noqa: E731
    click.echo(f"train {n(train)} / eval {n(eval_split)} questions")


@main.group("index")
def index_group():
    """Build and query the sparse retrieval index."""


@index_group.command("build")
@click.option("--paragraphs", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@handle_errors
def index_build(paragraphs, out_path, stopwords_path):
    paras = read_paragraphs(Path(paragraphs).read_text("utf-8"))
    config = PipelineConfig(stopwords_path=stopwords_path)
    index = retriever.build_index(paras, pipeline._preprocess_config(config))
    Path(out_path).write_text(index.to_json(), "utf-8")
    click.echo(f"indexed {index.n_paragraphs} paragraphs, {len(index.postings)} terms")


@index_group.command("query")
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--q", "query", required=True)
@click.option("--k", type=int, default=35, show_default=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@handle_errors
def index_query(index_path, query, k, stopwords_path):
    config = PipelineConfig(stopwords_path=stopwords_path)
    pconfig = pipeline._preprocess_config(config)
    index = retriever.SparseIndex.from_json(Path(index_path).read_text("utf-8"), pconfig)
    result = retriever.retrieve(index, query, k, pconfig)
    if result.empty_query:
        click.echo("warning: query empty after preprocessing", err=True)
    for pid, score in result.ranked:
        click.echo(f"{score:.6f}\t{pid}")


@index_group.command("recall")
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=35, show_default=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@handle_errors
def index_recall(index_path, dataset_path, k, stopwords_path):
    config = PipelineConfig(stopwords_path=stopwords_path)
    pconfig = pipeline._preprocess_config(config)
    index = retriever.SparseIndex.from_json(Path(index_path).read_text("utf-8"), pconfig)
    dataset = ds.QADataset.from_json(Path(dataset_path).read_text("utf-8"))
    report = retriever.retriever_recall(index, dataset, k, pconfig)
    click.echo(f"recall@{k} = {report.recall:.4f} ({report.hits}/{report.total})")
    if report.unindexed:
        click.echo(f"{len(report.unindexed)} questions with unindexed gold paragraphs",
                   err=True)


@main.command("ask")
@click.option("--q", "question", required=True)
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--paragraphs", type=click.Path(exists=True), required=True)
@click.option("--retriever-top-k", type=int, default=35, show_default=True)
@click.option("--reader-top-k", type=int, default=10, show_default=True)
@click.option("--reader", "reader_kind", type=click.Choice(["baseline", "remote"]),
              default="baseline", show_default=True)
@click.option("--endpoint", default="", help="Remote reader URL.")
@click.option("--json", "as_json", is_flag=True, help="Emit predictions as JSON.")
@handle_errors
def ask_cmd(question, index_path, paragraphs, retriever_top_k, reader_top_k,
            reader_kind, endpoint, as_json):
    """Answer a question through the retriever-reader pipeline."""
    config = PipelineConfig(reader_kind=reader_kind, endpoint=endpoint)
    pconfig = pipeline._preprocess_config(config)
    index = retriever.SparseIndex.from_json(Path(index_path).read_text("utf-8"), pconfig)
    paras = read_paragraphs(Path(paragraphs).read_text("utf-8"))
    by_id = {p.paragraph_id: p for p in paras}
    reader = pipeline.make_reader(config)
    from .reader import ask as run_ask

    predictions = run_ask(
        index, by_id, reader, question,
        retriever_k=retriever_top_k, reader_k=reader_top_k, config=pconfig,
    )
    if as_json:
        click.echo(predictions_to_json(predictions))
    elif predictions:
        click.echo(format_answers(predictions))
    else:
        click.echo("no answer found", err=True)


@main.group("eval")
def eval_group():
    """Evaluate the pipeline / compare runs."""


@eval_group.command("run")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--paragraphs", type=click.Path(exists=True), required=True)
@click.option("--reader", "reader_kind", type=click.Choice(["baseline", "remote"]),
              default="baseline", show_default=True)
@click.option("--endpoint", default="")
@click.option("--retriever-top-k", type=int, default=35, show_default=True)
@click.option("--reader-top-k", type=int, default=10, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@handle_errors
def eval_run(dataset_path, index_path, paragraphs, reader_kind, endpoint,
             retriever_top_k, reader_top_k, out_path):
    config = PipelineConfig(
        reader_kind=reader_kind, endpoint=endpoint,
        retriever_k=retriever_top_k, reader_k=reader_top_k,
    )
    pconfig = pipeline._preprocess_config(config)
    index = retriever.SparseIndex.from_json(Path(index_path).read_text("utf-8"), pconfig)
    dataset = ds.QADataset.from_json(Path(dataset_path).read_text("utf-8"))
    paras = read_paragraphs(Path(paragraphs).read_text("utf-8"))
    by_id = {p.paragraph_id: p for p in paras}
    reader = pipeline.make_reader(config)
    report = evaluation.evaluate_dataset(
        dataset, index, by_id, reader,
        retriever_k=retriever_top_k, reader_k=reader_top_k,
        model_name=reader_kind, config=pconfig, split_id=str(dataset_path),
    )
    click.echo(evaluation.render_table([report]))
    click.echo(f"RetrieverRecall@{retriever_top_k} = {report.retriever_recall:.4f}")
    if out_path:
        Path(out_path).write_text(report.to_json(), "utf-8")
        click.echo(f"wrote {out_path}")


@eval_group.command("compare")
@click.argument("report_a", type=click.Path(exists=True))
@click.argument("report_b", type=click.Path(exists=True))
@handle_errors
def eval_compare(report_a, report_b):
    a = evaluation.MetricReport.from_json(Path(report_a).read_text("utf-8"))
    b = evaluation.MetricReport.from_json(Path(report_b).read_text("utf-8"))
    for metric, change in evaluation.compare_runs(a, b).items():
        if isinstance(change, str):
            click.echo(f"{metric}: {change}")
        else:
            click.echo(f"{metric}: {change:+.2f}%")


@main.command("serve")
@click.option("--port", type=int, default=None)
@click.pass_context
@handle_errors
def serve_cmd(ctx, port):
    """Run the annotation + ask HTTP service over pipeline artifacts."""
    from .service import serve

    config = _load_config(ctx)
    serve(config, port)


@main.group("run")
def run_group():
    """Run config-driven pipeline stages with staleness checking."""


@run_group.command("all")
@click.pass_context
@handle_errors
def run_all_cmd(ctx):
    config = _load_config(ctx)
    for path in pipeline.run_all(config):
        click.echo(f"wrote {path}")


def _make_stage_command(stage_name: str):
    @run_group.command(stage_name)
    @click.pass_context
    @handle_errors
    def _cmd(ctx):
        config = _load_config(ctx)
        result = pipeline.run_stage(config, stage_name)
        paths = result if isinstance(result, tuple) else [result]
        for path in paths:
            click.echo(f"wrote {path}")

    _cmd.__name__ = f"run_{stage_name}"
    return _cmd


for _stage in STAGES:
    _make_stage_command(_stage)


@main.command("demo-config")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--workdir", type=click.Path(), required=True)
@handle_errors
def demo_config(out_path, workdir):
    """Write a config pointing at the bundled 200-post synthetic corpus."""
    from importlib import resources

    corpus = resources.files("forumqa.data").joinpath("synthetic_corpus.jsonl")
    input_path = Path(workdir) / "synthetic_input.jsonl"
    input_path.parent.mkdir(parents=True, exist_ok=True)
    input_path.write_text(corpus.read_text("utf-8"), "utf-8")
    config = PipelineConfig(
        workdir=str(workdir),
        input_path=str(input_path),
        n_topics=4,
        iterations=400,
        burn_in=100,
        min_df=2,
        max_df_fraction=0.6,
        aspects_per_topic=6,
        bigram_threshold=10,
        # Keep the chunk count under the default retriever_k=35 so top-35
        # retrieval spans the whole demo collection.
        max_words=250,
        overlap_words=30,
    )
    config.save(out_path)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
