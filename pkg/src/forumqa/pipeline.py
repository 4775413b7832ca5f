"""Stage orchestration: each stage reads its upstream artifacts (hash
checked), runs the corresponding module, and writes its output atomically
with a provenance sidecar."""

from __future__ import annotations

import logging
import time
from pathlib import Path

from . import dataset as ds
from . import evaluation, lda, preprocess, retriever, segment
from .artifacts import (
    StaleArtifactError,
    check_input,
    read_meta,
    sha256_path,
    write_artifact,
)
from .config import PipelineConfig
from .ingest import EmptyCorpusError, ParseReport, RawPost, clean_document, parse_post_dump
from .preprocess import BowDocument, PreprocessConfig, Vocabulary
from .reader import BaselineReader, Reader, RemoteReader

logger = logging.getLogger(__name__)


def _preprocess_config(config: PipelineConfig) -> PreprocessConfig:
    if config.stopwords_path:
        stopwords = preprocess.parse_stopwords(
            Path(config.stopwords_path).read_text("utf-8")
        )
    else:
        stopwords = preprocess.load_default_stopwords()
    return PreprocessConfig(
        stopwords=stopwords,
        min_df=config.min_df,
        max_df_fraction=config.max_df_fraction,
    )


def load_corpus(path: Path) -> list[RawPost]:
    return [
        RawPost.from_json(line)
        for line in path.read_text("utf-8").splitlines()
        if line.strip()
    ]


def stage_ingest(config: PipelineConfig, strict: bool = True) -> Path:
    if not config.input_path:
        raise FileNotFoundError("config.input_path is not set")
    report = ParseReport()
    raw = Path(config.input_path).read_bytes()
    posts = []
    for post in parse_post_dump(raw, config.input_format, report=report):
        body = clean_document(post.body, config.repeat_threshold)
        if not body.strip():
            report.skip(f"post {post.post_id}: empty after cleaning")
            continue
        post.body = body
        posts.append(post)
    if not posts:
        raise EmptyCorpusError("every post was empty after cleaning")
    content = "".join(p.to_json() + "\n" for p in posts)
    write_artifact(
        config.corpus_path, content, "ingest", config.stage_hash("ingest"),
        {"input": sha256_path(config.input_path)},
    )
    logger.info(
        "ingest: %d posts kept, %d records skipped", len(posts), report.records_skipped
    )
    return config.corpus_path


def stage_preprocess(config: PipelineConfig, strict: bool = True) -> tuple[Path, Path]:
    if strict:
        check_input(config.corpus_path, "ingest", config.stage_hash("ingest"), "preprocess")
    pconfig = _preprocess_config(config)
    posts = load_corpus(config.corpus_path)
    tokenized = [(p.post_id, preprocess.preprocess(p.body, pconfig)) for p in posts]
    vocab = preprocess.build_vocabulary(
        [toks for _, toks in tokenized], config.min_df, config.max_df_fraction
    )
    bows = [preprocess.vectorize(pid, toks, vocab) for pid, toks in tokenized]
    corpus_hash = sha256_path(config.corpus_path)
    write_artifact(
        config.vocab_path, vocab.to_tsv(), "preprocess",
        config.stage_hash("preprocess"), {"corpus": corpus_hash},
    )
    write_artifact(
        config.bow_path, "".join(b.to_json() + "\n" for b in bows), "preprocess",
        config.stage_hash("preprocess"), {"corpus": corpus_hash},
    )
    logger.info("preprocess: V=%d over %d documents", len(vocab), len(bows))
    return config.bow_path, config.vocab_path


def stage_lda(config: PipelineConfig, strict: bool = True) -> Path:
    if strict:
        h = config.stage_hash("preprocess")
        check_input(config.bow_path, "preprocess", h, "lda")
        check_input(config.vocab_path, "preprocess", h, "lda")
    vocab = Vocabulary.from_tsv(config.vocab_path.read_text("utf-8"))
    bows = list(preprocess.iter_bow_file(config.bow_path.read_text("utf-8").splitlines()))
    lconfig = lda.LdaConfig(
        n_topics=config.n_topics,
        alpha=config.alpha,
        beta=config.beta,
        iterations=config.iterations,
        burn_in=config.burn_in,
        seed=config.seed,
    )
    t0 = time.monotonic()
    model = lda.fit_lda(bows, len(vocab), lconfig, vocab_hash=vocab.content_hash())
    logger.info(
        "lda: %d sweeps over %d docs in %.1fs (%d skipped empty)",
        lconfig.iterations, len(model.doc_ids), time.monotonic() - t0,
        len(model.skipped_doc_ids),
    )

    pconfig = _preprocess_config(config)
    posts = load_corpus(config.corpus_path)
    tokenized = [preprocess.tokenize(p.body, pconfig.stopwords) for p in posts]
    model.aspects = lda.extract_aspects(
        model, vocab, tokenized,
        aspects_per_topic=config.aspects_per_topic,
        bigram_threshold=config.bigram_threshold,
    )
    write_artifact(
        config.model_path, model.to_json(), "lda", config.stage_hash("lda"),
        {"bow": sha256_path(config.bow_path), "vocab": sha256_path(config.vocab_path)},
    )
    return config.model_path


def stage_segment(config: PipelineConfig, strict: bool = True) -> Path:
    if strict:
        check_input(config.corpus_path, "ingest", config.stage_hash("ingest"), "segment")
        check_input(config.model_path, "lda", config.stage_hash("lda"), "segment")
    posts = load_corpus(config.corpus_path)
    model = lda.TopicModel.from_json(config.model_path.read_text("utf-8"))
    report = segment.SegmentReport()
    paragraphs = segment.segment(
        posts, model, config.max_words, config.overlap_words, report
    )
    write_artifact(
        config.paragraphs_path, segment.write_paragraphs(paragraphs), "segment",
        config.stage_hash("segment"),
        {"corpus": sha256_path(config.corpus_path), "model": sha256_path(config.model_path)},
    )
    logger.info(
        "segment: %d paragraphs covering %d posts (%d without topic)",
        report.paragraphs, report.posts_covered, len(report.posts_without_topic),
    )
    return config.paragraphs_path


def stage_dataset(config: PipelineConfig, strict: bool = True) -> Path:
    if strict:
        check_input(config.paragraphs_path, "segment", config.stage_hash("segment"), "dataset")
        check_input(config.model_path, "lda", config.stage_hash("lda"), "dataset")
    paragraphs = segment.read_paragraphs(config.paragraphs_path.read_text("utf-8"))
    model = lda.TopicModel.from_json(config.model_path.read_text("utf-8"))
    aspects_by_topic = {a.topic_id: a for a in model.aspects}
    if config.templates_path:
        templates = ds.parse_templates(Path(config.templates_path).read_text("utf-8"))
    else:
        templates = ds.load_default_templates()

    articles: dict[int, ds.Article] = {}
    for para in paragraphs:
        aspects = aspects_by_topic.get(para.topic_id)
        qas = ds.propose_questions(para, aspects, templates) if aspects else []
        articles.setdefault(
            para.topic_id, ds.Article(title=f"topic-{para.topic_id}")
        ).paragraphs.append(
            ds.DatasetParagraph(
                paragraph_id=para.paragraph_id,
                topic_id=para.topic_id,
                context=para.context,
                qas=qas,
            )
        )
    dataset = ds.QADataset(articles=[articles[k] for k in sorted(articles)])
    write_artifact(
        config.dataset_path, dataset.to_json(), "dataset", config.stage_hash("dataset"),
        {
            "paragraphs": sha256_path(config.paragraphs_path),
            "model": sha256_path(config.model_path),
        },
    )
    logger.info(
        "dataset: %d draft questions over %d paragraphs",
        sum(1 for _ in dataset.iter_qas()), len(paragraphs),
    )
    return config.dataset_path


def stage_index(config: PipelineConfig, strict: bool = True) -> Path:
    if strict:
        check_input(config.paragraphs_path, "segment", config.stage_hash("segment"), "index")
    paragraphs = segment.read_paragraphs(config.paragraphs_path.read_text("utf-8"))
    index = retriever.build_index(paragraphs, _preprocess_config(config))
    write_artifact(
        config.index_path, index.to_json(), "index", config.stage_hash("index"),
        {"paragraphs": sha256_path(config.paragraphs_path)},
    )
    logger.info("index: %d paragraphs, %d terms", index.n_paragraphs, len(index.postings))
    return config.index_path


def make_reader(config: PipelineConfig) -> Reader:
    if config.reader_kind == "baseline":
        return BaselineReader(
            window_sentences=config.window_sentences,
            config=_preprocess_config(config),
        )
    if config.reader_kind == "remote":
        if not config.endpoint:
            raise ValueError("remote reader requires config.endpoint")
        return RemoteReader(endpoint=config.endpoint)
    raise ValueError(f"unknown reader kind {config.reader_kind!r}")


def stage_eval(
    config: PipelineConfig,
    strict: bool = True,
    dataset_path: Path | None = None,
    reader: Reader | None = None,
    model_name: str | None = None,
) -> Path:
    if strict:
        check_input(config.index_path, "index", config.stage_hash("index"), "eval")
        check_input(config.paragraphs_path, "segment", config.stage_hash("segment"), "eval")
    if dataset_path is None:
        dataset_path = config.eval_path if config.eval_path.exists() else config.dataset_path
    dataset = ds.QADataset.from_json(Path(dataset_path).read_text("utf-8"))
    pconfig = _preprocess_config(config)
    index = retriever.SparseIndex.from_json(config.index_path.read_text("utf-8"), pconfig)
    paragraphs = segment.read_paragraphs(config.paragraphs_path.read_text("utf-8"))
    by_id = {p.paragraph_id: p for p in paragraphs}
    if reader is None:
        reader = make_reader(config)
    report = evaluation.evaluate_dataset(
        dataset, index, by_id, reader,
        retriever_k=config.retriever_k, reader_k=config.reader_k,
        model_name=model_name or config.reader_kind,
        config=pconfig,
        split_id=str(dataset_path),
    )
    inputs = {
        "dataset": sha256_path(dataset_path),
        "index": sha256_path(config.index_path),
    }
    write_artifact(
        config.report_path, report.to_json(), "eval", config.stage_hash("eval"), inputs,
    )
    write_artifact(
        config.path("report.txt"),
        evaluation.render_table([report]) + "\n",
        "eval", config.stage_hash("eval"), inputs,
    )
    logger.info("eval: %s", report.metrics())
    return config.report_path


def stage_split(config: PipelineConfig, strict: bool = True) -> tuple[Path, Path]:
    if strict:
        check_input(config.dataset_path, "dataset", config.stage_hash("dataset"), "dataset")
    dataset = ds.QADataset.from_json(config.dataset_path.read_text("utf-8"))
    train, eval_split, warnings = ds.split_train_eval(
        dataset, config.train_fraction, config.seed
    )
    for w in warnings:
        logger.warning("split: %s", w)
    h = config.stage_hash("dataset")
    src = {"dataset": sha256_path(config.dataset_path)}
    write_artifact(config.train_path, train.to_json(), "dataset", h, src)
    write_artifact(config.eval_path, eval_split.to_json(), "dataset", h, src)
    return config.train_path, config.eval_path


_STAGE_RUNNERS = {
    "ingest": stage_ingest,
    "preprocess": stage_preprocess,
    "lda": stage_lda,
    "segment": stage_segment,
    "dataset": stage_dataset,
    "index": stage_index,
    "eval": stage_eval,
}


def run_stage(config: PipelineConfig, stage: str, strict: bool = True):
    """Run one named stage; raises StaleArtifactError on hash mismatches."""
    if stage not in _STAGE_RUNNERS:
        raise ValueError(f"unknown stage {stage!r}; choose from {sorted(_STAGE_RUNNERS)}")
    t0 = time.monotonic()
    result = _STAGE_RUNNERS[stage](config, strict=strict)
    paths = result if isinstance(result, tuple) else (result,)
    for path in paths:
        meta = read_meta(path) or {}
        logger.info(
            "stage %s wrote %s (config %s, inputs %s) in %.2fs",
            stage, path, meta.get("config_hash"), meta.get("input_hashes"),
            time.monotonic() - t0,
        )
    return result


def run_all(config: PipelineConfig) -> list[Path]:
    """ingest -> preprocess -> lda -> segment -> dataset -> index -> eval."""
    out = []
    for stage in ("ingest", "preprocess", "lda", "segment", "dataset", "index", "eval"):
        result = run_stage(config, stage)
        out.extend(result if isinstance(result, tuple) else [result])
    return out
