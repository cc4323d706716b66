"""Text model files.

A model file is JSON::

    {"format": "mcsa-model", "version": 1,
     "config": {"s", "t", "G", "k", "a", "b", "alpha"},
     "classes": [name, ...] | null,
     "params": {name: [[float, ...], ...], ...}}

Floats are written with ``repr`` precision so a load/save round trip is exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FormatError, MCSAError
from .stream import ModelConfig, StreamModel

FORMAT = "mcsa-model"
VERSION = 1


def model_to_json(model: StreamModel, classes=None) -> str:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "config": model.config.to_dict(),
        "classes": list(classes) if classes is not None else None,
        "params": {n: model.params[n].tolist() for n in sorted(model.params)},
    }
    return json.dumps(doc, indent=1)


def model_from_json(text: str) -> tuple[StreamModel, list[str] | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise FormatError("not an mcsa model file")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported model version {doc.get('version')}")
    try:
        config = ModelConfig(**doc["config"])
        params = {n: np.asarray(v, dtype=np.float64) for n, v in doc["params"].items()}
        model = StreamModel(config, params)
    except (KeyError, TypeError, ValueError, MCSAError) as exc:
        raise FormatError(f"invalid model file: {exc}") from exc
    return model, doc.get("classes")


def save_model(path, model: StreamModel, classes=None) -> None:
    Path(path).write_text(model_to_json(model, classes))


def load_model(path) -> tuple[StreamModel, list[str] | None]:
    return model_from_json(Path(path).read_text())
