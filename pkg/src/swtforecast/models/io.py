"""Versioned JSON container for fitted models.

Layout (format_version 1):

    {
      "format_version": 1,
      "kind": "linear" | "forest_mimo" | "cnn" | "persistence",
      "model": {...},              # kind-specific payload
      "normalization": {           # optional, when saved with the model
        "features": {"minimum": [...], "maximum": [...]},
        "targets":  {"minimum": [...], "maximum": [...]}
      }
    }

The payload is plain JSON so the format is inspectable and stable across
releases; weights round-trip exactly because repr(float) is lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .baseline import PersistenceModel
from .cnn import ConvNet
from .forest import ForestMimo, ForestRegressor
from .linear import LinearMimo
from .normalization import NormalizationParams

FORMAT_VERSION = 1

_KINDS = {
    "linear": LinearMimo,
    "forest": ForestRegressor,
    "forest_mimo": ForestMimo,
    "cnn": ConvNet,
    "persistence": PersistenceModel,
}


def _normalization_to_dict(params: NormalizationParams) -> dict:
    return {"minimum": params.minimum.tolist(), "maximum": params.maximum.tolist()}


def _normalization_from_dict(payload: dict) -> NormalizationParams:
    return NormalizationParams(
        minimum=np.asarray(payload["minimum"], dtype=float),
        maximum=np.asarray(payload["maximum"], dtype=float),
    )


def save_model(model, path, normalization: dict[str, NormalizationParams] | None = None) -> None:
    if model.kind not in _KINDS:
        raise ValueError(f"unknown model kind {model.kind!r}")
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "model": model.to_dict(),
    }
    if normalization:
        payload["normalization"] = {
            name: _normalization_to_dict(p) for name, p in normalization.items()
        }
    Path(path).write_text(json.dumps(payload, sort_keys=True))


def load_model(path):
    payload = json.loads(Path(path).read_text())
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model container version {version!r}")
    kind = payload["kind"]
    if kind not in _KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    model = _KINDS[kind].from_dict(payload["model"])
    normalization = {
        name: _normalization_from_dict(p)
        for name, p in payload.get("normalization", {}).items()
    }
    return model, normalization
