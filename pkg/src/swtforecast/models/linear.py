"""Per-step linear MIMO regression via normal equations."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


def ridge_solve(design: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Solve least squares by normal equations with a trace-scaled ridge fallback.

    Well-conditioned systems use the plain normal equations.  Rank-deficient
    or near-singular ones (duplicated or constant columns) get a ridge of
    1e-8 * mean diagonal of X'X; two refinement steps then remove the ridge
    bias from the fitted values, because X'y always lies in the range of
    X'X.  Never raises for rank deficiency.
    """
    gram = design.T @ design
    rhs = design.T @ targets
    try:
        if np.linalg.cond(gram) < 1e12:
            weights = np.linalg.solve(gram, rhs)
            if np.all(np.isfinite(weights)):
                return weights
    except np.linalg.LinAlgError:
        pass
    k = gram.shape[0]
    trace = float(np.trace(gram))
    ridge = 1e-8 * (trace / k if trace > 0 else 1.0)
    damped = gram + ridge * np.eye(k)
    weights = np.linalg.solve(damped, rhs)
    for _ in range(2):
        weights = weights + np.linalg.solve(damped, rhs - gram @ weights)
    return weights


class LinearMimo:
    """27 independent per-step least-squares fits with intercept.

    All steps share the same design matrix, so the fits are solved in one
    call; the model still counts as one fitted model per output step.
    """

    kind = "linear"

    def __init__(self, weights: np.ndarray):
        self._weights = weights  # (k + 1, out_steps)

    @property
    def n_features(self) -> int:
        return self._weights.shape[0] - 1

    @property
    def out_steps(self) -> int:
        return self._weights.shape[1]

    @property
    def fitted_model_count(self) -> int:
        return self.out_steps

    def predict(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ShapeError(
                f"expected features with {self.n_features} columns, got shape {x.shape}"
            )
        design = np.hstack([x, np.ones((x.shape[0], 1))])
        out = design @ self._weights
        return out[0] if squeeze else out

    def to_dict(self) -> dict:
        return {"weights": self._weights.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "LinearMimo":
        return cls(np.asarray(payload["weights"], dtype=float))


def fit_mimo_linear(x, y) -> LinearMimo:
    """Fit the per-step linear model; rank deficiency falls back to ridge."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeError(
            f"need X (samples, k) and Y (samples, out) with equal sample counts, "
            f"got {x.shape} and {y.shape}"
        )
    design = np.hstack([x, np.ones((x.shape[0], 1))])
    return LinearMimo(ridge_solve(design, y))
