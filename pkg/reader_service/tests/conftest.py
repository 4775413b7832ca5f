import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

import pytest
import torch
from transformers import BertConfig, BertForQuestionAnswering, BertTokenizerFast

WORDS = [
    "the", "he", "is", "to", "leave", "house", "what", "of", "a", "afraid",
    "voices", "stop", "drink", "coffee", "with", "does", "schizophrenic",
    "i", "stopped", "drinking", "night", "scare", "him", "at", "my", "me",
    "demons", "sees", "see", "in", "hallucinations", "spiders",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """Randomly initialized 2-layer BERT QA checkpoint, built offline."""
    path = tmp_path_factory.mktemp("tinybert")
    vocab = (
        ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        + WORDS
        + list("abcdefghijklmnopqrstuvwxyz")
        + ["##" + c for c in "abcdefghijklmnopqrstuvwxyz"]
        + ["##" + w for w in ("s", "ing", "ed")]
    )
    (path / "vocab.txt").write_text("\n".join(vocab), "utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(path / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(path)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
        hidden_dropout_prob=0.0,
        attention_probs_dropout_prob=0.0,
    )
    torch.manual_seed(7)
    BertForQuestionAnswering(config).save_pretrained(path)
    return str(path)
