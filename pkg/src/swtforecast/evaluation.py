"""Forecast error metrics, model improvement, and the rank-sum test.

The six error metrics are computed exactly as defined for day-by-step
matrices: MAE and RMSE in megawatts, MRE as a percentage of the maximum
training power, and RAE / RRSE / R^2 normalized against the per-time-step
training-mean predictor.

Two coefficient-of-determination variants are reported.  ``r2`` follows the
printed explained-variance form sum((xbar - pred)^2) / sum((xbar - actual)^2);
``r2_standard`` is the conventional 1 - RSS/TSS against the same training-mean
baseline, i.e. 1 - RRSE^2.  Metrics whose denominator vanishes are reported
as None rather than NaN.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import DataError, ShapeError


@dataclass(frozen=True)
class MetricsContext:
    """Normalization constants, computed from training data only.

    ``max_power`` is the MRE denominator; ``step_means`` is the per-time-step
    training mean used as the reference predictor by RAE, RRSE, and R^2.
    """

    max_power: float
    step_means: np.ndarray

    def __post_init__(self):
        if not self.max_power > 0:
            raise DataError(f"maximum training power must be positive, got {self.max_power}")

    @classmethod
    def from_training(cls, train_values) -> "MetricsContext":
        arr = np.asarray(train_values, dtype=float)
        if arr.ndim != 2:
            raise ShapeError(f"training values must be (days, steps), got {arr.shape}")
        return cls(max_power=float(arr.max()), step_means=arr.mean(axis=0))


@dataclass(frozen=True)
class MetricsBundle:
    mae: float
    rmse: float
    mre_pct: float
    rae: float | None
    rrse: float | None
    r2: float | None
    r2_standard: float | None

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def compute_metrics(pred, actual, ctx: MetricsContext) -> MetricsBundle:
    """All six metrics over a (days, steps) prediction block."""
    p = np.asarray(pred, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.ndim != 2:
        raise ShapeError(f"pred and actual must be equal 2-D shapes, got {p.shape}, {a.shape}")
    if ctx.step_means.shape != (a.shape[1],):
        raise ShapeError(
            f"context has {ctx.step_means.shape[0]} step means but data has {a.shape[1]} steps"
        )
    err = p - a
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err**2)))
    assert mae <= rmse + 1e-12 * max(rmse, 1.0)
    mre = float(np.mean(np.abs(err / ctx.max_power))) * 100.0
    ref = np.broadcast_to(ctx.step_means, a.shape)
    abs_ref = float(np.sum(np.abs(ref - a)))
    sq_ref = float(np.sum((ref - a) ** 2))
    rae = float(np.sum(np.abs(err)) / abs_ref) if abs_ref > 0 else None
    if sq_ref > 0:
        rrse = float(np.sqrt(np.sum(err**2) / sq_ref))
        r2 = float(np.sum((ref - p) ** 2) / sq_ref)
        r2_standard = 1.0 - rrse**2
    else:
        rrse = r2 = r2_standard = None
    return MetricsBundle(
        mae=mae, rmse=rmse, mre_pct=mre, rae=rae, rrse=rrse, r2=r2, r2_standard=r2_standard
    )


def improvement(mae_without: float, mae_with: float) -> float | None:
    """Percentage MAE improvement of the transformed model over the plain one.

    Positive means the transform helped; None when the baseline MAE is zero.
    """
    if mae_without <= 0:
        return None
    return (mae_without - mae_with) / mae_without * 100.0


EXACT_LIMIT = 14


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # rank sum of the first sample, midranks for ties
    p_two_sided: float
    method: str  # "exact" or "normal"


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_p(ranks: np.ndarray, n: int, observed: float) -> float:
    """Enumerate every assignment of n ranks to the first sample."""
    total = ranks.sum()
    size = ranks.size
    mean = total * n / size
    dev = abs(observed - mean)
    hits = 0
    count = 0
    for combo in itertools.combinations(range(size), n):
        count += 1
        w = sum(ranks[i] for i in combo)
        if abs(w - mean) >= dev - 1e-12:
            hits += 1
    return hits / count


def wilcoxon_rank_sum(a, b, method: str = "auto") -> WilcoxonResult:
    """Two-sided rank-sum (Mann-Whitney) test with midranks for ties.

    Exact p by enumeration of rank assignments when n + m <= 14, otherwise a
    normal approximation with tie and continuity corrections; ``method`` can
    force either path.
    """
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"method must be auto, exact, or normal, got {method!r}")
    x = np.asarray(a, dtype=float).ravel()
    y = np.asarray(b, dtype=float).ravel()
    if x.size == 0 or y.size == 0:
        raise ShapeError("both samples must be nonempty")
    n, m = x.size, y.size
    ranks = _midranks(np.concatenate([x, y]))
    w = float(ranks[:n].sum())
    use_exact = method == "exact" or (method == "auto" and n + m <= EXACT_LIMIT)
    if use_exact:
        return WilcoxonResult(statistic=w, p_two_sided=_exact_p(ranks, n, w), method="exact")
    total = n + m
    mean = n * (total + 1) / 2.0
    _, counts = np.unique(np.concatenate([x, y]), return_counts=True)
    tie_term = float(np.sum(counts**3 - counts)) / (total * (total - 1))
    var = n * m / 12.0 * ((total + 1) - tie_term)
    if var <= 0:
        return WilcoxonResult(statistic=w, p_two_sided=1.0, method="normal")
    z = max(abs(w - mean) - 0.5, 0.0) / math.sqrt(var)
    p = min(1.0, 2.0 * 0.5 * math.erfc(z / math.sqrt(2.0)))
    return WilcoxonResult(statistic=w, p_two_sided=p, method="normal")


def breakdown_by_timestep(pred, actual, ctx: MetricsContext) -> list[tuple[str, MetricsBundle]]:
    """Metrics recomputed per forecast step; labels are the step indices."""
    p = np.asarray(pred, dtype=float)
    a = np.asarray(actual, dtype=float)
    out = []
    for t in range(a.shape[1]):
        slice_ctx = MetricsContext(
            max_power=ctx.max_power, step_means=ctx.step_means[t : t + 1]
        )
        out.append((f"t{t:02d}", compute_metrics(p[:, t : t + 1], a[:, t : t + 1], slice_ctx)))
    return out


def breakdown_by_month(
    pred, actual, ctx: MetricsContext, dates
) -> list[tuple[str, MetricsBundle]]:
    """Metrics recomputed per calendar month of the test days."""
    p = np.asarray(pred, dtype=float)
    a = np.asarray(actual, dtype=float)
    if len(dates) != a.shape[0]:
        raise ShapeError(f"need one date per day: {len(dates)} dates, {a.shape[0]} days")
    labels = [f"{d.year:04d}-{d.month:02d}" for d in dates]
    out = []
    for label in sorted(set(labels)):
        mask = np.array([lab == label for lab in labels])
        out.append((label, compute_metrics(p[mask], a[mask], ctx)))
    return out


def monthly_significance(
    pred_a, pred_b, actual, dates
) -> list[tuple[str, float, bool]]:
    """Rank-sum p-values comparing two models' per-day MAE within each month.

    Returns (month, p_two_sided, significant at 0.05) rows; the samples are
    the unpaired per-day MAE values of each model.
    """
    pa = np.asarray(pred_a, dtype=float)
    pb = np.asarray(pred_b, dtype=float)
    a = np.asarray(actual, dtype=float)
    day_mae_a = np.mean(np.abs(pa - a), axis=1)
    day_mae_b = np.mean(np.abs(pb - a), axis=1)
    labels = [f"{d.year:04d}-{d.month:02d}" for d in dates]
    out = []
    for label in sorted(set(labels)):
        mask = np.array([lab == label for lab in labels])
        res = wilcoxon_rank_sum(day_mae_a[mask], day_mae_b[mask])
        out.append((label, res.p_two_sided, res.p_two_sided <= 0.05))
    return out


def _format(value) -> str:
    return "" if value is None else repr(float(value))


def write_breakdown_csv(rows: list[tuple[str, MetricsBundle]], path) -> None:
    lines = ["slice,mae,rmse,mre_pct,rae,rrse,r2,r2_standard"]
    for label, bundle in rows:
        d = bundle.to_dict()
        lines.append(
            ",".join(
                [label]
                + [_format(d[k]) for k in ("mae", "rmse", "mre_pct", "rae", "rrse", "r2", "r2_standard")]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_significance_csv(rows: list[tuple[str, float, bool]], path) -> None:
    lines = ["slice,p_two_sided,significant_at_0.05"]
    for label, p, sig in rows:
        lines.append(f"{label},{p!r},{str(sig).lower()}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
