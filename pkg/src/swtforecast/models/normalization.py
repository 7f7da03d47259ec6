"""Min-max normalization fitted on training data only."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError


@dataclass(frozen=True)
class NormalizationParams:
    """Per-feature minima and maxima computed from the training split.

    The transform is affine and unclipped: training extremes map to 0 and 1,
    out-of-range test values map outside [0, 1].  Constant features map to 0
    (a warning is emitted when they are fitted).
    """

    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum


def fit_normalizer(train: np.ndarray, per_feature: bool = True) -> NormalizationParams:
    """Compute min/max over training data; columns are features when 2-D.

    With ``per_feature=False`` a single global min/max pair is used, which is
    the convention for the target side (overall power range).
    """
    arr = np.asarray(train, dtype=float)
    if arr.size == 0:
        raise ShapeError("cannot fit a normalizer on empty data")
    if per_feature and arr.ndim >= 2:
        flat = arr.reshape(-1, arr.shape[-1])
        lo, hi = flat.min(axis=0), flat.max(axis=0)
    else:
        lo = np.atleast_1d(np.asarray(arr.min(), dtype=float))
        hi = np.atleast_1d(np.asarray(arr.max(), dtype=float))
    if np.any(hi == lo):
        warnings.warn(
            "constant feature(s) found while fitting normalizer; they map to 0",
            stacklevel=2,
        )
    return NormalizationParams(minimum=lo, maximum=hi)


def normalize(values: np.ndarray, params: NormalizationParams) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    span = params.span.copy()
    degenerate = span == 0
    span[degenerate] = 1.0
    out = (arr - params.minimum) / span
    if np.any(degenerate):
        out = np.where(degenerate, 0.0, out)
    return out


def denormalize(values: np.ndarray, params: NormalizationParams) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr * params.span + params.minimum
