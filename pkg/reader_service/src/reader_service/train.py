"""Fine-tuning on a SQuAD-format dataset file.

The train file is validated (offset soundness, structure) before any
training step runs. Defaults follow the published setup: ADAM with weight
decay 0.01, learning rate 1e-05, 20 epochs, max sequence length 384.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import torch
from torch.utils.data import DataLoader, Dataset
from transformers import AutoModelForQuestionAnswering, AutoTokenizer

from .config import TrainConfig

logger = logging.getLogger(__name__)


class InvalidDataset(Exception):
    pass


@dataclass
class SquadExample:
    qid: str
    question: str
    context: str
    answer_text: str
    answer_start: int


def load_squad_file(path: str | Path) -> list[SquadExample]:
    """Parse and validate; raises InvalidDataset on any violation."""
    try:
        obj = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidDataset(f"cannot read {path}: {exc}") from exc
    examples: list[SquadExample] = []
    seen: set[str] = set()
    for article in obj.get("data", []):
        for para in article.get("paragraphs", []):
            context = para.get("context")
            if not isinstance(context, str) or not context:
                raise InvalidDataset("paragraph without context")
            for qa in para.get("qas", []):
                qid = str(qa.get("id"))
                if qid in seen:
                    raise InvalidDataset(f"duplicate qid {qid}")
                seen.add(qid)
                if not qa.get("answers"):
                    continue  # unannotated draft; nothing to train on
                for ans in qa["answers"]:
                    start = int(ans["answer_start"])
                    text = ans["text"]
                    if context[start : start + len(text)] != text:
                        raise InvalidDataset(
                            f"answer offset mismatch for {qid} at {start}"
                        )
                    examples.append(
                        SquadExample(
                            qid=qid, question=qa["question"], context=context,
                            answer_text=text, answer_start=start,
                        )
                    )
    if not examples:
        raise InvalidDataset("no annotated answers in train file")
    return examples


class _SquadDataset(Dataset):
    def __init__(self, examples: list[SquadExample], tokenizer, max_seq_length: int):
        self.items = []
        for ex in examples:
            enc = tokenizer(
                ex.question,
                ex.context,
                truncation="only_second",
                max_length=max_seq_length,
                return_offsets_mapping=True,
            )
            offsets = enc["offset_mapping"]
            seq_ids = enc.sequence_ids(0)
            a0, a1 = ex.answer_start, ex.answer_start + len(ex.answer_text)
            start_tok = end_tok = None
            for i, (s, e) in enumerate(offsets):
                if seq_ids[i] != 1:
                    continue
                if s <= a0 < e:
                    start_tok = i
                if s < a1 <= e:
                    end_tok = i
            if start_tok is None or end_tok is None:
                continue  # answer outside the truncated window
            self.items.append(
                {
                    "input_ids": torch.tensor(enc["input_ids"]),
                    "attention_mask": torch.tensor(enc["attention_mask"]),
                    "token_type_ids": torch.tensor(
                        enc.get("token_type_ids", [0] * len(enc["input_ids"]))
                    ),
                    "start_positions": torch.tensor(start_tok),
                    "end_positions": torch.tensor(end_tok),
                }
            )
        if not self.items:
            raise InvalidDataset("every answer fell outside the model window")

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]


def _collate(batch, pad_id: int):
    width = max(len(b["input_ids"]) for b in batch)

    def pad(key, value):
        return torch.stack(
            [
                torch.cat([b[key], torch.full((width - len(b[key]),), value)])
                for b in batch
            ]
        )

    return {
        "input_ids": pad("input_ids", pad_id),
        "attention_mask": pad("attention_mask", 0),
        "token_type_ids": pad("token_type_ids", 0),
        "start_positions": torch.stack([b["start_positions"] for b in batch]),
        "end_positions": torch.stack([b["end_positions"] for b in batch]),
    }


def finetune(
    train_file: str | Path,
    base_model: str | Path,
    output_dir: str | Path,
    config: TrainConfig | None = None,
    device: str = "cpu",
) -> dict:
    """Fine-tune base_model on the train file; saves the checkpoint and a
    training log, returns the log (hyperparameters + per-step losses)."""
    config = config or TrainConfig()
    examples = load_squad_file(train_file)  # validates before training

    torch.manual_seed(config.seed)
    tokenizer = AutoTokenizer.from_pretrained(base_model)
    model = AutoModelForQuestionAnswering.from_pretrained(base_model)
    model.to(device)
    model.train()

    dataset = _SquadDataset(examples, tokenizer, config.max_seq_length)
    loader = DataLoader(
        dataset,
        batch_size=config.batch_size,
        shuffle=len(dataset) > 1,
        generator=torch.Generator().manual_seed(config.seed),
        collate_fn=lambda b: _collate(b, tokenizer.pad_token_id or 0),
    )
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )

    losses: list[float] = []
    for epoch in range(config.num_train_epochs):
        for batch in loader:
            batch = {k: v.to(device) for k, v in batch.items()}
            out = model(**batch)
            out.loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            losses.append(out.loss.item())
    logger.info("finetune: %d examples, %d steps, final loss %.4f",
                len(dataset), len(losses), losses[-1])

    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(output_dir)
    tokenizer.save_pretrained(output_dir)
    log = {
        "hyperparameters": config.to_dict(),
        "train_examples": len(dataset),
        "steps": len(losses),
        "losses": losses,
    }
    (output_dir / "training_log.json").write_text(json.dumps(log, indent=1), "utf-8")
    return log
