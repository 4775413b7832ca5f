"""Extractive QA model wrapper: span prediction with character offsets.

Answer text is always sliced from the supplied context at the predicted
offsets, so offset soundness holds by construction; clients are still
expected to re-validate (the service is untrusted by design). Offsets
count Unicode scalar values, matching the fast tokenizer's offset mapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from transformers import AutoModelForQuestionAnswering, AutoTokenizer

from .config import ServiceConfig


class ContextTooLong(Exception):
    """Context exceeds the model window and sliding-window is disabled."""


@dataclass
class SpanAnswer:
    context_id: str
    text: str
    start: int
    end: int
    score: float


class ExtractiveQaModel:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model_path)
        self.model = AutoModelForQuestionAnswering.from_pretrained(config.model_path)
        self.model.to(config.device)
        self.model.eval()

    def _encode(self, question: str, context: str):
        kwargs = dict(
            truncation="only_second",
            max_length=self.config.max_seq_length,
            return_offsets_mapping=True,
            return_tensors="pt",
            padding=False,
        )
        if self.config.sliding_window:
            # stride must stay below the context capacity of the window;
            # windows differ in length, so pad for tensor batching
            question_len = len(self.tokenizer(question)["input_ids"])
            capacity = max(1, self.config.max_seq_length - question_len - 1)
            kwargs["return_overflowing_tokens"] = True
            kwargs["stride"] = min(self.config.doc_stride, capacity // 2)
            kwargs["padding"] = True
        enc = self.tokenizer(question, context, **kwargs)
        if not self.config.sliding_window:
            # Reject rather than silently truncating the context.
            probe = self.tokenizer(question, context, return_offsets_mapping=False)
            if len(probe["input_ids"]) > self.config.max_seq_length:
                raise ContextTooLong(
                    f"question+context tokenizes to {len(probe['input_ids'])} tokens, "
                    f"window is {self.config.max_seq_length}"
                )
        return enc

    @torch.no_grad()
    def predict(
        self, question: str, contexts: list[tuple[str, str]], top_k: int
    ) -> list[SpanAnswer]:
        """Best top_k spans across all contexts, scores in [0, 1]."""
        candidates: list[SpanAnswer] = []
        for context_id, context in contexts:
            enc = self._encode(question, context)
            n_features = enc["input_ids"].shape[0]
            for f in range(n_features):
                input_ids = enc["input_ids"][f : f + 1].to(self.config.device)
                attention = enc["attention_mask"][f : f + 1].to(self.config.device)
                kwargs = {}
                if "token_type_ids" in enc:
                    kwargs["token_type_ids"] = enc["token_type_ids"][f : f + 1].to(
                        self.config.device
                    )
                out = self.model(input_ids=input_ids, attention_mask=attention, **kwargs)
                start_p = torch.softmax(out.start_logits[0], dim=-1)
                end_p = torch.softmax(out.end_logits[0], dim=-1)

                offsets = enc["offset_mapping"][f]
                seq_ids = enc.sequence_ids(f)
                ctx_token_idx = [i for i, s in enumerate(seq_ids) if s == 1]
                if not ctx_token_idx:
                    continue
                # joint score of (start, end) token pairs within the context,
                # answer length capped in tokens
                ctx_set = set(ctx_token_idx)
                best: list[tuple[float, int, int]] = []
                for i in ctx_token_idx:
                    for j in range(i, min(i + self.config.max_answer_length, len(seq_ids))):
                        if j not in ctx_set:
                            break
                        score = float(start_p[i] * end_p[j])
                        best.append((score, i, j))
                best.sort(reverse=True)
                for score, i, j in best[: top_k * 2]:
                    cs, ce = int(offsets[i][0]), int(offsets[j][1])
                    if ce <= cs:
                        continue
                    text = context[cs:ce]
                    if not text.strip():
                        continue
                    candidates.append(
                        SpanAnswer(
                            context_id=context_id, text=text, start=cs, end=ce,
                            score=min(1.0, max(0.0, score)),
                        )
                    )
        candidates.sort(key=lambda a: (-a.score, a.context_id, a.start))
        # distinct spans only
        seen: set[tuple[str, int, int]] = set()
        out: list[SpanAnswer] = []
        for cand in candidates:
            key = (cand.context_id, cand.start, cand.end)
            if key in seen:
                continue
            seen.add(key)
            out.append(cand)
            if len(out) >= top_k:
                break
        return out
