"""Assemble topic paragraphs: posts grouped by dominant topic, concatenated
in date order, and split into bounded, sentence-aligned chunks."""

from __future__ import annotations

import bisect
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .ingest import RawPost, plan_split
from .lda import TopicModel
from .sentences import sentence_spans

_WORD = re.compile(r"\S+")

DEFAULT_MAX_WORDS = 385
DEFAULT_OVERLAP_WORDS = 50


@dataclass
class TopicParagraph:
    paragraph_id: str  # "topic-{k}-{seq}"
    topic_id: int
    context: str
    member_post_ids: list[str]
    word_count: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "paragraph_id": self.paragraph_id,
                "topic_id": self.topic_id,
                "context": self.context,
                "member_post_ids": self.member_post_ids,
                "word_count": self.word_count,
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "TopicParagraph":
        obj = json.loads(line)
        return cls(
            paragraph_id=obj["paragraph_id"],
            topic_id=int(obj["topic_id"]),
            context=obj["context"],
            member_post_ids=list(obj["member_post_ids"]),
            word_count=int(obj["word_count"]),
        )


@dataclass
class SegmentReport:
    paragraphs: int = 0
    posts_covered: int = 0
    posts_without_topic: list[str] = field(default_factory=list)


def _word_index_ranges(text: str) -> list[tuple[int, int]]:
    return [(m.start(), m.end()) for m in _WORD.finditer(text)]


def segment(
    posts: Sequence[RawPost],
    model: TopicModel,
    max_words: int = DEFAULT_MAX_WORDS,
    overlap_words: int = DEFAULT_OVERLAP_WORDS,
    report: SegmentReport | None = None,
) -> list[TopicParagraph]:
    """Build topic paragraphs from posts whose dominant topic the model knows.

    Posts are grouped by dominant topic, ordered by (date, post id),
    concatenated with a blank line, and split with split_with_overlap
    semantics. Every covered post appears in at least one paragraph of its
    topic; posts absent from the model (empty after preprocessing) are
    listed on the report.
    """
    if report is None:
        report = SegmentReport()
    known = set(model.doc_ids)
    by_topic: dict[int, list[RawPost]] = {}
    for post in posts:
        if not post.body.strip():
            continue
        if post.post_id not in known:
            report.posts_without_topic.append(post.post_id)
            continue
        k = model.dominant_topic(post.post_id)
        by_topic.setdefault(k, []).append(post)

    covered: set[str] = set()
    paragraphs: list[TopicParagraph] = []
    for k in sorted(by_topic):
        group = sorted(by_topic[k], key=lambda p: (p.posted_at, p.post_id))
        text = "\n\n".join(p.body for p in group)
        word_spans = _word_index_ranges(text)
        word_starts = [s for s, _ in word_spans]

        # Word index range of each post within the concatenation.
        post_word_ranges: list[tuple[int, int, str]] = []
        offset = 0
        for p in group:
            lo = bisect.bisect_left(word_starts, offset)
            hi = bisect.bisect_left(word_starts, offset + len(p.body))
            post_word_ranges.append((lo, hi, p.post_id))
            offset += len(p.body) + 2  # "\n\n" separator

        # Sentence word ranges, with over-long sentences hard-chunked.
        pseudo: list[tuple[int, int]] = []
        for cs, ce in sentence_spans(text):
            lo = bisect.bisect_left(word_starts, cs)
            hi = bisect.bisect_right(word_starts, ce - 1)
            while hi - lo > max_words:
                pseudo.append((lo, lo + max_words))
                lo += max_words
            if hi > lo:
                pseudo.append((lo, hi))

        plan = plan_split([hi - lo for lo, hi in pseudo], max_words, overlap_words)
        for seq, piece in enumerate(plan):
            a, b = piece.start_word, piece.end_word
            context = text[word_spans[a][0] : word_spans[b - 1][1]]
            members = [pid for lo, hi, pid in post_word_ranges if lo < b and hi > a]
            covered.update(members)
            paragraphs.append(
                TopicParagraph(
                    paragraph_id=f"topic-{k}-{seq}",
                    topic_id=k,
                    context=context,
                    member_post_ids=members,
                    word_count=b - a,
                )
            )
    report.paragraphs = len(paragraphs)
    report.posts_covered = len(covered)
    return paragraphs


def paragraph_stats(paragraphs: Iterable[TopicParagraph]) -> dict:
    """Summary in the dataset-statistics row schema: posts, max seq words,
    topic paragraph groups, plus chunk counts per topic and the mean length."""
    per_topic: dict[int, int] = {}
    posts: set[str] = set()
    max_words = 0
    total_words = 0
    n = 0
    for p in paragraphs:
        n += 1
        per_topic[p.topic_id] = per_topic.get(p.topic_id, 0) + 1
        posts.update(p.member_post_ids)
        max_words = max(max_words, p.word_count)
        total_words += p.word_count
    return {
        "user_posts": len(posts),
        "max_seq_words": max_words,
        "topic_paragraphs": len(per_topic),
        "paragraph_chunks": n,
        "mean_seq_words": (total_words / n) if n else 0.0,
        "chunks_per_topic": {str(k): v for k, v in sorted(per_topic.items())},
    }


def write_paragraphs(paragraphs: Iterable[TopicParagraph]) -> str:
    return "".join(p.to_json() + "\n" for p in paragraphs)


def read_paragraphs(text: str) -> list[TopicParagraph]:
    return [TopicParagraph.from_json(line) for line in text.splitlines() if line.strip()]
