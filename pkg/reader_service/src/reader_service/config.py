"""Service and training configuration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class TrainConfig:
    """Fine-tuning hyperparameters; defaults follow the published training
    setup (ADAM, weight decay 0.01, lr 1e-05, 20 epochs, max seq 384)."""

    optimizer: str = "adamw"
    weight_decay: float = 0.01
    learning_rate: float = 1e-5
    num_train_epochs: int = 20
    max_seq_length: int = 384
    doc_stride: int = 128
    batch_size: int = 8
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ServiceConfig:
    model_path: str
    max_seq_length: int = 384
    doc_stride: int = 128
    sliding_window: bool = True
    device: str = "cpu"
    max_answer_length: int = 64
    train: TrainConfig = field(default_factory=TrainConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        obj = json.loads(Path(path).read_text("utf-8"))
        train = TrainConfig(**obj.pop("train", {}))
        return cls(train=train, **obj)
