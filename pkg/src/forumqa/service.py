"""HTTP service backing the annotation workflow and the ask endpoint.

Single-writer: the process holds an exclusive lock on the write-ahead log;
a second server on the same dataset fails to start. Every mutation is
appended (and fsynced) to the WAL before it is acknowledged; on startup the
WAL is replayed over the base dataset file, so a crash between append and
dataset flush loses nothing that was acknowledged. Reads are served from
the in-memory dataset under a lock shared with writers.
"""

from __future__ import annotations

import fcntl
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import HTMLResponse, JSONResponse
from pydantic import BaseModel

from . import dataset as ds
from .config import PipelineConfig
from .lda import TopicModel
from .pipeline import _preprocess_config, make_reader
from .reader import ask
from .retriever import SparseIndex
from .segment import TopicParagraph, read_paragraphs

logger = logging.getLogger(__name__)


class WriterConflict(Exception):
    """Another process already holds the dataset's write lock."""


@dataclass
class AnnotationStore:
    """In-memory dataset with WAL durability and single-writer locking."""

    dataset: ds.QADataset
    paragraphs: dict[str, TopicParagraph]
    aspects_by_topic: dict[int, list[str]]
    wal_path: Path
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)
    _wal_file: object = field(default=None, repr=False)
    _annotations: dict[str, tuple[str, ds.QAAnswer]] = field(default_factory=dict, repr=False)
    _counters: dict[str, int] = field(default_factory=dict, repr=False)
    _qid_counters: dict[str, int] = field(default_factory=dict, repr=False)

    @classmethod
    def open(
        cls,
        dataset: ds.QADataset,
        paragraphs: dict[str, TopicParagraph],
        aspects_by_topic: dict[int, list[str]],
        wal_path: Path,
    ) -> "AnnotationStore":
        store = cls(
            dataset=dataset,
            paragraphs=paragraphs,
            aspects_by_topic=aspects_by_topic,
            wal_path=wal_path,
        )
        for para in dataset.iter_paragraphs():
            store._qid_counters[para.paragraph_id] = len(para.qas)
            for qa in para.qas:
                for answer in qa.answers:
                    store._register_annotation(qa.qid, answer)
        store._acquire_lock()
        store._replay()
        return store

    def _acquire_lock(self) -> None:
        self.wal_path.parent.mkdir(parents=True, exist_ok=True)
        f = open(self.wal_path, "a+", encoding="utf-8")
        try:
            fcntl.flock(f.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            f.close()
            raise WriterConflict(
                f"another writer holds the lock on {self.wal_path}"
            ) from exc
        self._wal_file = f

    def close(self) -> None:
        if self._wal_file is not None:
            fcntl.flock(self._wal_file.fileno(), fcntl.LOCK_UN)
            self._wal_file.close()
            self._wal_file = None

    def _register_annotation(self, qid: str, answer: ds.QAAnswer) -> str:
        n = self._counters.get(qid, 0)
        self._counters[qid] = n + 1
        ann_id = f"{qid}:{n}"
        self._annotations[ann_id] = (qid, answer)
        return ann_id

    def _replay(self) -> None:
        self.wal_path.parent.mkdir(parents=True, exist_ok=True)
        if not self.wal_path.exists():
            return
        replayed = 0
        for line in self.wal_path.read_text("utf-8").splitlines():
            if not line.strip():
                continue
            try:
                op = json.loads(line)
            except json.JSONDecodeError:
                logger.warning("skipping torn WAL record (crash before ack)")
                continue
            try:
                self._apply(op)
                replayed += 1
            except (ds.DatasetError, KeyError) as exc:
                logger.warning("skipping unreplayable WAL record: %s", exc)
        if replayed:
            logger.info("replayed %d WAL records", replayed)

    def _apply(self, op: dict) -> str | None:
        kind = op["op"]
        if kind == "add_question":
            para = self._find_paragraph(op["paragraph_id"])
            qa = ds.QAItem(
                qid=op["qid"],
                question=op["question"],
                aspect=op.get("aspect", ""),
                needs_review=bool(op.get("needs_review", False)),
            )
            para.qas.append(qa)
            return op["qid"]
        if kind == "add_annotation":
            answer = ds.add_answer(self.dataset, op["qid"], op["start"], op["end"])
            ann_id = self._register_annotation(op["qid"], answer)
            if ann_id != op["annotation_id"]:  # counter drift would be a bug
                logger.warning(
                    "replayed annotation id %s != logged %s", ann_id, op["annotation_id"]
                )
            return ann_id
        if kind == "delete_annotation":
            self._delete(op["annotation_id"])
            return op["annotation_id"]
        raise ds.DatasetError(f"unknown WAL op {kind!r}")

    def _find_paragraph(self, paragraph_id: str) -> ds.DatasetParagraph:
        for para in self.dataset.iter_paragraphs():
            if para.paragraph_id == paragraph_id:
                return para
        raise KeyError(f"unknown paragraph {paragraph_id!r}")

    def _delete(self, annotation_id: str) -> None:
        if annotation_id not in self._annotations:
            raise KeyError(f"unknown annotation {annotation_id!r}")
        qid, answer = self._annotations.pop(annotation_id)
        _, qa = self.dataset.find_qa(qid)
        qa.answers = [a for a in qa.answers if a is not answer]

    def _log(self, op: dict) -> None:
        line = json.dumps(op, ensure_ascii=False, separators=(",", ":"))
        self._wal_file.write(line + "\n")
        self._wal_file.flush()
        os.fsync(self._wal_file.fileno())

    # ------------------------------------------------------------------
    # Public mutations (validate, WAL, apply, ack)

    def add_question(self, paragraph_id: str, aspect: str, question: str) -> str:
        with self._lock:
            para = self._find_paragraph(paragraph_id)
            if not question.strip():
                raise ds.DatasetError("question must be non-empty")
            allowed = self.aspects_by_topic.get(para.topic_id, [])
            if aspect and allowed and aspect not in allowed:
                raise ds.DatasetError(
                    f"aspect {aspect!r} is not one of topic {para.topic_id}'s aspects"
                )
            if any(q.question == question for q in para.qas):
                raise ds.DatasetError("duplicate question text in this paragraph")
            n = self._qid_counters.get(paragraph_id, 0)
            qid = f"{paragraph_id}-q{n}"
            while any(q.qid == qid for q in para.qas):
                n += 1
                qid = f"{paragraph_id}-q{n}"
            self._qid_counters[paragraph_id] = n + 1
            op = {
                "op": "add_question",
                "paragraph_id": paragraph_id,
                "aspect": aspect,
                "question": question,
                "qid": qid,
            }
            self._log(op)
            self._apply(op)
            return qid

    def add_annotation(self, qid: str, start: int, end: int) -> tuple[str, str]:
        with self._lock:
            para, qa = self.dataset.find_qa(qid)  # KeyError -> 404
            # Validate before logging; add_answer revalidates on apply.
            if not 0 <= start < end <= len(para.context):
                raise ds.DatasetError(
                    f"span ({start}, {end}) out of bounds for context of "
                    f"length {len(para.context)}"
                )
            if not para.context[start:end].strip():
                raise ds.DatasetError(f"span ({start}, {end}) covers only whitespace")
            ann_id = f"{qid}:{self._counters.get(qid, 0)}"
            op = {
                "op": "add_annotation",
                "qid": qid,
                "start": start,
                "end": end,
                "annotation_id": ann_id,
            }
            self._log(op)
            self._apply(op)
            return ann_id, para.context[start:end]

    def delete_annotation(self, annotation_id: str) -> None:
        with self._lock:
            if annotation_id not in self._annotations:
                raise KeyError(f"unknown annotation {annotation_id!r}")
            op = {"op": "delete_annotation", "annotation_id": annotation_id}
            self._log(op)
            self._apply(op)

    # ------------------------------------------------------------------
    # Reads

    def topics(self) -> list[dict]:
        with self._lock:
            per_topic: dict[int, dict] = {}
            for topic_id, aspects in sorted(self.aspects_by_topic.items()):
                per_topic[topic_id] = {
                    "topic_id": topic_id,
                    "aspects": aspects,
                    "questions": 0,
                    "answers": 0,
                }
            for para, qa in self.dataset.iter_qas():
                entry = per_topic.setdefault(
                    para.topic_id,
                    {"topic_id": para.topic_id, "aspects": [], "questions": 0, "answers": 0},
                )
                entry["questions"] += 1
                entry["answers"] += len(qa.answers)
            return [per_topic[k] for k in sorted(per_topic)]

    def paragraphs_for_topic(self, topic_id: int) -> list[dict]:
        with self._lock:
            out = []
            for para in self.dataset.iter_paragraphs():
                if para.topic_id != topic_id:
                    continue
                out.append(
                    {
                        "paragraph_id": para.paragraph_id,
                        "topic_id": para.topic_id,
                        "context": para.context,
                        "questions": len(para.qas),
                        "answers": sum(len(q.answers) for q in para.qas),
                    }
                )
            return out

    def questions_for_paragraph(self, paragraph_id: str) -> list[dict]:
        with self._lock:
            para = self._find_paragraph(paragraph_id)
            reverse = {
                id(ans): ann_id for ann_id, (_, ans) in self._annotations.items()
            }
            return [
                {
                    "qid": qa.qid,
                    "question": qa.question,
                    "aspect": qa.aspect,
                    "needs_review": qa.needs_review,
                    "answers": [
                        {
                            "annotation_id": reverse.get(id(a), ""),
                            "text": a.text,
                            "answer_start": a.answer_start,
                        }
                        for a in qa.answers
                    ],
                }
                for qa in para.qas
            ]

    def export(self) -> dict:
        with self._lock:
            return self.dataset.to_dict()


# ---------------------------------------------------------------------------
# FastAPI wiring


class QuestionIn(BaseModel):
    paragraph_id: str
    aspect: str = ""
    question: str


class AnnotationIn(BaseModel):
    qid: str
    start: int
    end: int


class AskIn(BaseModel):
    question: str
    retriever_k: int | None = None
    reader_k: int | None = None


def create_app(config: PipelineConfig) -> FastAPI:
    """Build the service over existing pipeline artifacts."""
    paragraphs = {
        p.paragraph_id: p
        for p in read_paragraphs(config.paragraphs_path.read_text("utf-8"))
    }
    model = TopicModel.from_json(config.model_path.read_text("utf-8"))
    aspects_by_topic = {a.topic_id: a.aspects for a in model.aspects}
    if config.dataset_path.exists():
        dataset = ds.QADataset.from_json(config.dataset_path.read_text("utf-8"))
    else:
        dataset = ds.QADataset()
    store = AnnotationStore.open(dataset, paragraphs, aspects_by_topic, config.wal_path)

    pconfig = _preprocess_config(config)
    index = SparseIndex.from_json(config.index_path.read_text("utf-8"), pconfig)
    reader = make_reader(config)

    app = FastAPI(title="forumqa annotation service")
    app.state.store = store

    @app.exception_handler(ds.DatasetError)
    async def _dataset_error(request, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(KeyError)
    async def _key_error(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.get("/topics")
    def get_topics():
        return store.topics()

    @app.get("/paragraphs")
    def get_paragraphs(topic: int):
        return store.paragraphs_for_topic(topic)

    @app.get("/questions")
    def get_questions(paragraph: str):
        return store.questions_for_paragraph(paragraph)

    @app.post("/questions")
    def post_question(body: QuestionIn):
        qid = store.add_question(body.paragraph_id, body.aspect, body.question)
        return {"qid": qid}

    @app.post("/annotations")
    def post_annotation(body: AnnotationIn):
        ann_id, text = store.add_annotation(body.qid, body.start, body.end)
        return {"annotation_id": ann_id, "text": text}

    @app.delete("/annotations/{annotation_id}")
    def delete_annotation(annotation_id: str):
        store.delete_annotation(annotation_id)
        return {"deleted": annotation_id}

    @app.get("/dataset/export")
    def export_dataset():
        return store.export()

    @app.post("/ask")
    def post_ask(body: AskIn):
        predictions = ask(
            index,
            paragraphs,
            reader,
            body.question,
            retriever_k=body.retriever_k or config.retriever_k,
            reader_k=body.reader_k or config.reader_k,
            config=pconfig,
        )
        return {
            "answers": [
                {
                    "text": p.text,
                    "score": p.score,
                    "paragraph_id": p.paragraph_id,
                    "char_start": p.char_start,
                    "char_end": p.char_end,
                    "retrieval_score": p.retrieval_score,
                }
                for p in predictions
            ]
        }

    @app.get("/", response_class=HTMLResponse)
    def root():
        return (
            "<html><body><h1>forumqa annotation service</h1>"
            "<p>API: /topics, /paragraphs?topic=K, /questions?paragraph=ID, "
            "POST /questions, POST /annotations, DELETE /annotations/{id}, "
            "/dataset/export, POST /ask</p></body></html>"
        )

    return app


def serve(config: PipelineConfig, port: int | None = None) -> None:
    """Run the annotation service; raises on port conflicts at bind time."""
    import uvicorn

    app = create_app(config)
    try:
        uvicorn.run(app, host="127.0.0.1", port=port or config.port, log_level="info")
    finally:
        app.state.store.close()
