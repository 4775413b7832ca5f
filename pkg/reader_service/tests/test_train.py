import json

import pytest

from reader_service.config import TrainConfig
from reader_service.train import InvalidDataset, finetune, load_squad_file

CONTEXT = "He is afraid to leave the house. The voices scare him at night."


def squad_file(tmp_path, answer_start=9, answer_text="afraid to leave the house"):
    data = {
        "version": "1.1",
        "data": [
            {
                "title": "topic-0",
                "paragraphs": [
                    {
                        "context": CONTEXT,
                        "qas": [
                            {
                                "id": "q1",
                                "question": "what is he afraid of",
                                "answers": [
                                    {"text": answer_text, "answer_start": answer_start}
                                ],
                            }
                        ],
                    }
                ],
            }
        ],
    }
    path = tmp_path / "train.json"
    path.write_text(json.dumps(data), "utf-8")
    return path


class TestLoadSquadFile:
    def test_valid_file(self, tmp_path):
        start = CONTEXT.index("afraid to leave the house")
        examples = load_squad_file(squad_file(tmp_path, answer_start=start))
        assert len(examples) == 1
        assert examples[0].answer_text == "afraid to leave the house"

    def test_offset_mismatch_rejected(self, tmp_path):
        with pytest.raises(InvalidDataset):
            load_squad_file(squad_file(tmp_path, answer_start=0))

    def test_no_answers_rejected(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({"version": "1.1", "data": []}), "utf-8")
        with pytest.raises(InvalidDataset):
            load_squad_file(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("not json at all", "utf-8")
        with pytest.raises(InvalidDataset):
            load_squad_file(path)


class TestFinetune:
    def test_default_config_matches_published_setup(self):
        config = TrainConfig()
        assert config.optimizer == "adamw"
        assert config.weight_decay == 0.01
        assert config.learning_rate == 1e-5
        assert config.num_train_epochs == 20
        assert config.max_seq_length == 384

    def test_invalid_dataset_fails_before_training(self, tmp_path, tiny_checkpoint):
        with pytest.raises(InvalidDataset):
            finetune(
                squad_file(tmp_path, answer_start=0),
                tiny_checkpoint,
                tmp_path / "out",
            )
        assert not (tmp_path / "out").exists()

    def test_one_example_overfit_loss_monotonically_decreases(
        self, tmp_path, tiny_checkpoint
    ):
        start = CONTEXT.index("afraid to leave the house")
        # 20 full-batch steps on one example; dropout is 0 in the fixture
        # model, so each step is a clean gradient step.
        config = TrainConfig(
            learning_rate=5e-4, num_train_epochs=20, max_seq_length=96,
            batch_size=1, seed=0,
        )
        log = finetune(
            squad_file(tmp_path, answer_start=start),
            tiny_checkpoint,
            tmp_path / "out",
            config=config,
        )
        losses = log["losses"]
        assert len(losses) == 20
        assert all(b < a for a, b in zip(losses, losses[1:])), losses
        assert log["hyperparameters"]["weight_decay"] == 0.01

    def test_finetuned_checkpoint_serves_valid_protocol_responses(
        self, tmp_path, tiny_checkpoint
    ):
        from fastapi.testclient import TestClient

        from reader_service.app import create_app
        from reader_service.config import ServiceConfig

        start = CONTEXT.index("afraid to leave the house")
        config = TrainConfig(
            learning_rate=5e-4, num_train_epochs=5, max_seq_length=96, batch_size=1
        )
        out = tmp_path / "finetuned"
        finetune(squad_file(tmp_path, answer_start=start), tiny_checkpoint, out, config)
        assert (out / "training_log.json").exists()

        client = TestClient(
            create_app(ServiceConfig(model_path=str(out), max_seq_length=96))
        )
        resp = client.post(
            "/answer",
            json={
                "question": "what is he afraid of",
                "top_k": 10,
                "contexts": [{"id": "c", "text": CONTEXT}],
            },
        )
        assert resp.status_code == 200
        answers = resp.json()["answers"]
        assert answers
        for a in answers:
            assert CONTEXT[a["start"] : a["end"]] == a["text"]
            assert 0.0 <= a["score"] <= 1.0
