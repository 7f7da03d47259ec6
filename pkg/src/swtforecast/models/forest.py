"""Random forest regression built on variance-reduction CART trees.

Trees are grown to purity (unlimited depth, min_samples_split=2) on
bootstrap resamples, all features are scanned at every split, and the
forest prediction is the mean of the tree outputs.  All randomness flows
from the seed, so fits are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 50
    bootstrap: bool = True
    min_samples_split: int = 2
    seed: int = 0


def _best_split(x: np.ndarray, y: np.ndarray) -> tuple[int, float] | None:
    """Feature index and threshold minimizing total child squared error.

    All features are scored at once: columns are sorted together and the
    per-candidate child errors come from prefix sums.  Ties break on the
    first (position, feature) pair in row-major order, which keeps tree
    growth deterministic.
    """
    n = y.size
    y_sum = y.sum()
    y_sq = (y * y).sum()
    parent_sse = y_sq - y_sum * y_sum / n
    order = np.argsort(x, axis=0, kind="stable")
    sorted_x = np.take_along_axis(x, order, axis=0)
    sorted_y = y[order]
    cum_sum = np.cumsum(sorted_y, axis=0)
    cum_sq = np.cumsum(sorted_y * sorted_y, axis=0)
    counts = np.arange(1, n, dtype=float)[:, None]
    # candidate split after sorted position i (left = first i+1 samples)
    left_sse = cum_sq[:-1] - cum_sum[:-1] ** 2 / counts
    right_sum = y_sum - cum_sum[:-1]
    right_sq = y_sq - cum_sq[:-1]
    right_sse = right_sq - right_sum**2 / (n - counts)
    valid = sorted_x[:-1] < sorted_x[1:]
    if not np.any(valid):
        return None
    score = np.where(valid, left_sse + right_sse, np.inf)
    position, feature = np.unravel_index(int(np.argmin(score)), score.shape)
    best_score = score[position, feature]
    if not best_score < parent_sse - 1e-12 * max(parent_sse, 1.0):
        return None
    threshold = 0.5 * (sorted_x[position, feature] + sorted_x[position + 1, feature])
    return int(feature), float(threshold)


def _grow(x: np.ndarray, y: np.ndarray, min_samples_split: int) -> dict:
    if y.size < min_samples_split or np.ptp(y) == 0.0:
        return {"value": float(y.mean())}
    split = _best_split(x, y)
    if split is None:
        return {"value": float(y.mean())}
    feature, threshold = split
    mask = x[:, feature] <= threshold
    return {
        "feature": feature,
        "threshold": float(threshold),
        "left": _grow(x[mask], y[mask], min_samples_split),
        "right": _grow(x[~mask], y[~mask], min_samples_split),
    }


def _tree_predict(node: dict, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0])
    stack = [(node, np.arange(x.shape[0]))]
    while stack:
        current, idx = stack.pop()
        if "value" in current:
            out[idx] = current["value"]
            continue
        mask = x[idx, current["feature"]] <= current["threshold"]
        stack.append((current["left"], idx[mask]))
        stack.append((current["right"], idx[~mask]))
    return out


class ForestRegressor:
    """Single-output forest; one of these is fitted per forecast step."""

    kind = "forest"

    def __init__(self, trees: list[dict], n_features: int, config: ForestConfig):
        self._trees = trees
        self.n_features = n_features
        self.config = config

    def predict(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.n_features:
            raise ShapeError(
                f"expected {self.n_features} features, got shape {x.shape}"
            )
        votes = np.stack([_tree_predict(t, x) for t in self._trees])
        out = votes.mean(axis=0)
        return float(out[0]) if squeeze else out

    def to_dict(self) -> dict:
        return {
            "trees": self._trees,
            "n_features": self.n_features,
            "config": vars(self.config),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ForestRegressor":
        return cls(
            payload["trees"], int(payload["n_features"]), ForestConfig(**payload["config"])
        )


def fit_random_forest_step(x, y, config: ForestConfig = ForestConfig()) -> ForestRegressor:
    """Grow one forest for a single output step."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ShapeError(f"need X (samples, k) and y (samples,), got {x.shape}, {y.shape}")
    if x.shape[0] < 2:
        raise ShapeError("need at least 2 samples to grow a forest")
    rng = np.random.default_rng(config.seed)
    n = x.shape[0]
    trees = []
    for _ in range(config.n_estimators):
        if config.bootstrap:
            idx = rng.integers(0, n, size=n)
            trees.append(_grow(x[idx], y[idx], config.min_samples_split))
        else:
            trees.append(_grow(x, y, config.min_samples_split))
    return ForestRegressor(trees, x.shape[1], config)


class ForestMimo:
    """Per-step forests behind the uniform MIMO prediction interface."""

    kind = "forest_mimo"

    def __init__(self, steps: list[ForestRegressor]):
        self._steps = steps

    @property
    def out_steps(self) -> int:
        return len(self._steps)

    @property
    def fitted_model_count(self) -> int:
        return len(self._steps)

    def predict(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        out = np.column_stack([m.predict(x) for m in self._steps])
        return out[0] if squeeze else out

    def to_dict(self) -> dict:
        return {"steps": [m.to_dict() for m in self._steps]}

    @classmethod
    def from_dict(cls, payload: dict) -> "ForestMimo":
        return cls([ForestRegressor.from_dict(p) for p in payload["steps"]])


def fit_mimo_forest(x, y, config: ForestConfig = ForestConfig()) -> ForestMimo:
    """One forest per output column, with per-step derived seeds."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ShapeError(f"Y must be (samples, out_steps), got shape {y.shape}")
    models = []
    for t in range(y.shape[1]):
        step_cfg = ForestConfig(
            n_estimators=config.n_estimators,
            bootstrap=config.bootstrap,
            min_samples_split=config.min_samples_split,
            seed=config.seed * 10007 + t,
        )
        models.append(fit_random_forest_step(x, y[:, t], step_cfg))
    return ForestMimo(models)
