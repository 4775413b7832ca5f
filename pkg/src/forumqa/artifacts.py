"""Atomic artifact writes with sidecar provenance metadata.

Every stage output gets a `<name>.meta.json` sidecar recording the stage
name, the stage's config hash, and the content hashes of its inputs.
Staleness is decided from hashes, never mtimes: re-exported corpora lie
about times. Sidecars carry no timestamps so repeat runs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path


class StaleArtifactError(Exception):
    """An input artifact was produced under a different config."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stale artifact for stage {stage!r}: {message}")
        self.stage = stage


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def sha256_path(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def atomic_write(path: str | Path, data: str | bytes) -> None:
    """Write via temp file + rename in the destination directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, encoding=None if isinstance(data, bytes) else "utf-8") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def meta_path(artifact: str | Path) -> Path:
    return Path(str(artifact) + ".meta.json")


def write_artifact(
    path: str | Path,
    content: str | bytes,
    stage: str,
    config_hash: str,
    input_hashes: dict[str, str] | None = None,
) -> None:
    atomic_write(path, content)
    meta = {
        "stage": stage,
        "config_hash": config_hash,
        "input_hashes": dict(sorted((input_hashes or {}).items())),
    }
    atomic_write(meta_path(path), json.dumps(meta, indent=1, sort_keys=True) + "\n")


def read_meta(path: str | Path) -> dict | None:
    mp = meta_path(path)
    if not mp.exists():
        return None
    return json.loads(mp.read_text("utf-8"))


def check_input(artifact: str | Path, producing_stage: str, expected_hash: str, for_stage: str) -> None:
    """Verify an upstream artifact exists and matches the current config."""
    artifact = Path(artifact)
    if not artifact.exists():
        raise StaleArtifactError(
            for_stage, f"missing input {artifact} (run stage {producing_stage!r} first)"
        )
    meta = read_meta(artifact)
    if meta is None:
        raise StaleArtifactError(
            for_stage, f"input {artifact} has no provenance sidecar"
        )
    if meta.get("stage") != producing_stage:
        raise StaleArtifactError(
            for_stage,
            f"input {artifact} was produced by stage {meta.get('stage')!r}, "
            f"expected {producing_stage!r}",
        )
    if meta.get("config_hash") != expected_hash:
        raise StaleArtifactError(
            for_stage,
            f"input {artifact} was produced under config {meta.get('config_hash')}, "
            f"current config for {producing_stage!r} hashes to {expected_hash}; "
            f"re-run stage {producing_stage!r}",
        )
