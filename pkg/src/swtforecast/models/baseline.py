"""Persistence baseline: tomorrow equals today."""

from __future__ import annotations

import numpy as np

from ..errors import DataError, ShapeError


def persistence_forecast(values, day: int) -> np.ndarray:
    """Forecast for ``day`` is row ``day - 1`` verbatim.

    Accepts a (days, steps) array or anything exposing one as ``.values``.
    """
    arr = np.asarray(getattr(values, "values", values), dtype=float)
    if arr.ndim != 2:
        raise ShapeError(f"expected a (days, steps) matrix, got shape {arr.shape}")
    if day < 1:
        raise DataError(f"day {day} has no previous day to persist")
    if day >= arr.shape[0]:
        raise DataError(f"day {day} outside matrix with {arr.shape[0]} days")
    return arr[day - 1].copy()


class PersistenceModel:
    """Uniform-interface wrapper: predicts the (raw) input day unchanged."""

    kind = "persistence"
    fitted_model_count = 0

    def __init__(self, steps: int = 27):
        self.steps = steps

    def predict(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[-1] != self.steps:
            raise ShapeError(f"expected {self.steps} steps, got shape {x.shape}")
        out = x.copy()
        return out[0] if squeeze else out

    def to_dict(self) -> dict:
        return {"steps": self.steps}

    @classmethod
    def from_dict(cls, payload: dict) -> "PersistenceModel":
        return cls(int(payload["steps"]))
