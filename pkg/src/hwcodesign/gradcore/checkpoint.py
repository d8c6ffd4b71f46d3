"""JSON checkpoints for MLPs plus optional scaler and metadata."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .nn import MlpModel
from .scaling import RobustScaler

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(models: dict[str, MlpModel], scaler: RobustScaler | None = None, meta: dict | None = None) -> str:
    doc = {
        "version": CHECKPOINT_VERSION,
        "models": {name: m.state() for name, m in models.items()},
        "scaler": scaler.state() if scaler is not None else None,
        "meta": meta or {},
    }
    return json.dumps(doc, sort_keys=True)


def save(path, models: dict[str, MlpModel], scaler=None, meta=None) -> str:
    """Write a checkpoint and return its sha256."""
    text = dumps(models, scaler, meta)
    Path(path).write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def load(path) -> tuple[dict[str, MlpModel], RobustScaler | None, dict]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from None
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r} in {path}")
    models = {name: MlpModel.from_state(st) for name, st in doc["models"].items()}
    scaler = RobustScaler.from_state(doc["scaler"]) if doc.get("scaler") else None
    return models, scaler, doc.get("meta", {})


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
