"""Pipeline configuration: one dataclass holding every stage's parameters
and artifact paths, plus per-stage config hashing for staleness tracking.

A stage's hash covers its own parameters and everything upstream, so
editing any parameter invalidates exactly the artifacts downstream of it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

STAGES = ("ingest", "preprocess", "lda", "segment", "dataset", "index", "eval")

# Parameters that feed each stage (cumulative upstream closure is applied
# in stage_hash).
_STAGE_PARAMS: dict[str, tuple[str, ...]] = {
    "ingest": ("input_path", "input_format", "repeat_threshold"),
    "preprocess": ("stopwords_path", "min_df", "max_df_fraction"),
    "lda": (
        "n_topics", "alpha", "beta", "iterations", "burn_in", "seed",
        "aspects_per_topic", "bigram_threshold",
    ),
    "segment": ("max_words", "overlap_words"),
    "dataset": ("templates_path", "train_fraction"),
    "index": (),
    "eval": ("retriever_k", "reader_k", "reader_kind", "endpoint", "window_sentences"),
}

_UPSTREAM: dict[str, tuple[str, ...]] = {
    "ingest": (),
    "preprocess": ("ingest",),
    "lda": ("ingest", "preprocess"),
    "segment": ("ingest", "preprocess", "lda"),
    "dataset": ("ingest", "preprocess", "lda", "segment"),
    "index": ("ingest", "preprocess", "lda", "segment"),
    "eval": ("ingest", "preprocess", "lda", "segment", "dataset", "index"),
}


@dataclass
class PipelineConfig:
    workdir: str = "pipeline"

    # ingest
    input_path: str = ""
    input_format: str = "jsonl"
    repeat_threshold: int = 3

    # preprocess
    stopwords_path: str | None = None
    min_df: int = 5
    max_df_fraction: float = 0.5

    # lda
    n_topics: int = 35
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    seed: int = 0
    aspects_per_topic: int = 9
    bigram_threshold: int = 25

    # segment
    max_words: int = 385
    overlap_words: int = 50

    # dataset
    templates_path: str | None = None
    train_fraction: float = 0.7

    # retrieval / reading / eval
    retriever_k: int = 35
    reader_k: int = 10
    reader_kind: str = "baseline"  # baseline | remote
    endpoint: str = ""
    window_sentences: int = 3

    # service
    port: int = 8099

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", "utf-8")

    # ------------------------------------------------------------------
    # Artifact paths

    def path(self, name: str) -> Path:
        return Path(self.workdir) / name

    @property
    def corpus_path(self) -> Path:
        return self.path("corpus.jsonl")

    @property
    def bow_path(self) -> Path:
        return self.path("bow.jsonl")

    @property
    def vocab_path(self) -> Path:
        return self.path("vocab.tsv")

    @property
    def model_path(self) -> Path:
        return self.path("model.json")

    @property
    def paragraphs_path(self) -> Path:
        return self.path("paragraphs.jsonl")

    @property
    def dataset_path(self) -> Path:
        return self.path("dataset.json")

    @property
    def train_path(self) -> Path:
        return self.path("dataset.train.json")

    @property
    def eval_path(self) -> Path:
        return self.path("dataset.eval.json")

    @property
    def index_path(self) -> Path:
        return self.path("index.json")

    @property
    def report_path(self) -> Path:
        return self.path("report.json")

    @property
    def wal_path(self) -> Path:
        return self.path("annotations.wal")

    # ------------------------------------------------------------------
    # Hashing

    def stage_hash(self, stage: str) -> str:
        """Hash of this stage's parameters plus all upstream stages'."""
        if stage not in _STAGE_PARAMS:
            raise ValueError(f"unknown stage {stage!r}")
        d = self.to_dict()
        payload: dict[str, object] = {}
        for s in (*_UPSTREAM[stage], stage):
            for param in _STAGE_PARAMS[s]:
                payload[param] = d[param]
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]
