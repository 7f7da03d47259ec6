"""Forecasting pipelines: components-based and coefficients-based routes.

Three architectures share one protocol.  The components route ("mm") models
each reconstructed wavelet component with its own per-step model bank and
sums the per-component forecasts.  The coefficients routes feed the raw
coefficient bands to a single model, either as extra feature channels
("mc", any model) or as separate network input branches ("mi", CNN only).
A config with no wavelet settings bypasses the transform entirely and
models the raw day, which is the plain-model benchmark.

Leakage discipline: the transform runs day by day, the padder (when used)
is refit only on days already observed, and every normalizer and metric
context is fitted on the training split alone.  Test predictions are made
one sample at a time so a forecast never depends on which other test days
happen to be in the batch.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import DailyMatrix, step_labels
from .errors import ConfigError, DataError, ShapeError
from .evaluation import MetricsBundle, MetricsContext, compute_metrics, improvement
from .models.baseline import persistence_forecast
from .models.cnn import CnnConfig, fit_cnn
from .models.forest import ForestConfig, fit_mimo_forest
from .models.linear import fit_mimo_linear
from .models.normalization import denormalize, fit_normalizer, normalize
from .padding import (
    PADDER_WARMUP_DAYS,
    LinearPadder,
    pad_lr,
    pad_rep,
    padding_plan,
)
from .wavelets import daubechies_filters, reconstruct_components, swt

MODELS = ("persistence", "lr", "rf", "cnn")
APPROACHES = ("mm", "mc", "mi")
PADDINGS = ("rep", "lr")


@dataclass(frozen=True)
class PipelineConfig:
    """One experiment cell: model, architecture, and wavelet settings.

    ``wavelet_order`` and ``level`` are either both set (the transform is
    applied) or both None (raw-day features, the no-transform benchmark).
    """

    model: str
    approach: str = "mc"
    wavelet_order: int | None = None
    level: int | None = None
    padding: str = "rep"
    seed: int = 0
    train_days: int = 365
    validation_fraction: float = 0.3
    rf_estimators: int = 50
    cnn_filters: int = 32
    cnn_max_epochs: int = 200
    cnn_patience: int = 20

    @property
    def uses_swt(self) -> bool:
        return self.wavelet_order is not None

    @property
    def n_coeff(self) -> int:
        return (self.level + 1) if self.uses_swt else 1

    def violations(self) -> list[str]:
        problems = []
        if self.model not in MODELS:
            problems.append(f"model must be one of {MODELS}, got {self.model!r}")
        if self.approach not in APPROACHES:
            problems.append(f"approach must be one of {APPROACHES}, got {self.approach!r}")
        if self.approach == "mi" and self.model not in ("cnn", "persistence"):
            problems.append("the multiple-inputs architecture requires the cnn model")
        if (self.wavelet_order is None) != (self.level is None):
            problems.append("wavelet_order and level must be set together")
        if self.wavelet_order is not None and not 1 <= self.wavelet_order <= 7:
            problems.append(f"wavelet_order must be in [1, 7], got {self.wavelet_order}")
        if self.level is not None and not 1 <= self.level <= 4:
            problems.append(f"level must be in [1, 4], got {self.level}")
        if self.approach in ("mm", "mi") and self.model != "persistence" and not self.uses_swt:
            problems.append(f"approach {self.approach!r} requires wavelet settings")
        if self.padding not in PADDINGS:
            problems.append(f"padding must be one of {PADDINGS}, got {self.padding!r}")
        if self.train_days < 2:
            problems.append(f"train_days must be >= 2, got {self.train_days}")
        if self.uses_swt and self.padding == "lr" and self.train_days <= PADDER_WARMUP_DAYS:
            problems.append(
                f"padding 'lr' needs train_days > {PADDER_WARMUP_DAYS}, got {self.train_days}"
            )
        if not 0.0 < self.validation_fraction < 1.0:
            problems.append(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        return problems

    def validate(self) -> "PipelineConfig":
        problems = self.violations()
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def label(self) -> str:
        if self.model == "persistence":
            return "persistence"
        if not self.uses_swt:
            return self.model
        return f"{self.model}_{self.approach}"

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "approach": self.approach,
            "wavelet_order": self.wavelet_order,
            "level": self.level,
            "padding": self.padding,
            "seed": self.seed,
            "train_days": self.train_days,
            "validation_fraction": self.validation_fraction,
            "rf_estimators": self.rf_estimators,
            "cnn_filters": self.cnn_filters,
            "cnn_max_epochs": self.cnn_max_epochs,
            "cnn_patience": self.cnn_patience,
        }


@dataclass(frozen=True)
class FeatureTensor:
    """(samples, n_steps, n_coeff) block of model inputs."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 3:
            raise ShapeError(f"feature tensor must be 3-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("feature tensor contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    @property
    def n_coeff(self) -> int:
        return self.values.shape[2]

    def flat(self) -> np.ndarray:
        return self.values.reshape(self.n_samples, -1)


@dataclass(frozen=True)
class DailySamples:
    """Per-day training pairs: features of day d, targets of day d+1.

    ``day_index[i]`` is the featured day, so the target row is that day + 1.
    For the components route ``component_targets`` holds the next-day
    component values, band-aligned with the feature channels.
    """

    features: FeatureTensor
    targets: np.ndarray
    day_index: np.ndarray
    component_targets: np.ndarray | None = None


def first_feature_day(cfg: PipelineConfig) -> int:
    """Earliest day whose transform is defined under the config."""
    if not cfg.uses_swt:
        return 0
    if cfg.padding == "lr":
        return PADDER_WARMUP_DAYS
    return 1


def _daily_transforms(matrix: DailyMatrix, cfg: PipelineConfig) -> dict[int, np.ndarray]:
    """Per-day (27, n_coeff) band slices, computed strictly causally.

    Day t is decomposed from [day t-1 | day t | right pad]; the pad is the
    repeated core day or the padder's next-day prediction, and the padder
    has only ever been fitted on days <= t.
    """
    values = matrix.values
    steps = values.shape[1]
    filt = daubechies_filters(cfg.wavelet_order)
    plan = padding_plan(steps, steps, filt, cfg.level)
    start = first_feature_day(cfg)
    padder = None
    if cfg.padding == "lr":
        padder = LinearPadder(steps).fit([values[i] for i in range(PADDER_WARMUP_DAYS)])
    out: dict[int, np.ndarray] = {}
    for day in range(start, values.shape[0]):
        if cfg.padding == "lr" and day > start:
            padder.update(values[day])
        if cfg.padding == "lr":
            padded = pad_lr(padder, values[day - 1], values[day], plan)
        else:
            padded = pad_rep(values[day - 1], values[day], plan)
        coeffs = swt(padded.values, filt, cfg.level)
        if cfg.approach == "mm":
            bands = reconstruct_components(coeffs, filt).to_array()
        else:
            bands = coeffs.to_array()
        out[day] = bands[padded.core_off : padded.right_off]
    return out


def transform_daily(matrix: DailyMatrix, cfg: PipelineConfig) -> DailySamples:
    """Build the (features, target) sample stream for one config.

    Raw configs use the day itself as the single feature channel.  With the
    transform, features are the coefficient (or component) bands of day d
    restricted to the core-day positions; the target is day d+1 in MW.
    """
    values = matrix.values
    n_days = values.shape[0]
    if n_days < 3:
        raise DataError(f"need at least 3 days, got {n_days}")
    if not cfg.uses_swt:
        day_index = np.arange(0, n_days - 1)
        feats = values[:-1, :, None]
        return DailySamples(
            features=FeatureTensor(feats),
            targets=values[1:].copy(),
            day_index=day_index,
        )
    transforms = _daily_transforms(matrix, cfg)
    start = first_feature_day(cfg)
    days = [d for d in range(start, n_days - 1)]
    feats = np.stack([transforms[d] for d in days])
    targets = values[[d + 1 for d in days]].copy()
    component_targets = None
    if cfg.approach == "mm":
        component_targets = np.stack([transforms[d + 1] for d in days])
    return DailySamples(
        features=FeatureTensor(feats),
        targets=targets,
        day_index=np.asarray(days),
        component_targets=component_targets,
    )


@dataclass(frozen=True)
class ForecastReport:
    """Predictions, scores, model count, and timing for one pipeline run.

    ``improvement_pct`` is the percentage MAE improvement over the matching
    model without the transform (positive means the transform helped); it is
    attached by :func:`with_improvement` when a baseline run is available.
    """

    config: PipelineConfig
    predictions: np.ndarray
    actuals: np.ndarray
    target_dates: tuple
    metrics: MetricsBundle
    fitted_model_count: int
    wall_time_s: float
    improvement_pct: float | None = None

    def to_dict(self, include_timing: bool = True) -> dict:
        payload = {
            "config": self.config.to_dict(),
            "label": self.config.label(),
            "metrics": self.metrics.to_dict(),
            "improvement_pct": self.improvement_pct,
            "fitted_model_count": self.fitted_model_count,
            "test_days": int(self.predictions.shape[0]),
        }
        if include_timing:
            payload["wall_time_s"] = self.wall_time_s
        return payload


def with_improvement(report: ForecastReport, baseline: ForecastReport) -> ForecastReport:
    """Attach the percentage MAE improvement over a no-transform baseline."""
    return replace(report, improvement_pct=improvement(baseline.metrics.mae, report.metrics.mae))


def split_dataset(matrix: DailyMatrix, train_days: int = 365) -> tuple[DailyMatrix, DailyMatrix]:
    """Chronological split; the boundary is configurable for synthetic data."""
    if matrix.n_days <= train_days:
        raise DataError(
            f"need more than {train_days} days to split, got {matrix.n_days}"
        )
    return matrix.take_days(0, train_days), matrix.take_days(train_days, matrix.n_days)


def _split_samples(samples: DailySamples, train_days: int):
    train_mask = samples.day_index + 1 <= train_days - 1
    test_mask = samples.day_index + 1 >= train_days
    if not np.any(train_mask):
        raise DataError("no training samples; train_days too small for this config")
    if not np.any(test_mask):
        raise DataError("no test samples; dataset does not extend past train_days")
    return train_mask, test_mask


def _chronological_validation(n: int, fraction: float) -> tuple[slice, slice]:
    n_val = max(1, int(round(n * fraction)))
    n_val = min(n_val, n - 1)
    return slice(0, n - n_val), slice(n - n_val, n)


def _predict_rows(model, features_2d: np.ndarray) -> np.ndarray:
    """Predict one sample at a time so results never depend on batch shape."""
    return np.vstack([model.predict(row[None, ...])[0] for row in features_2d])


def _fit_flat_model(cfg: PipelineConfig, x: np.ndarray, y: np.ndarray):
    if cfg.model == "lr":
        return fit_mimo_linear(x, y)
    if cfg.model == "rf":
        return fit_mimo_forest(x, y, ForestConfig(n_estimators=cfg.rf_estimators, seed=cfg.seed))
    raise ConfigError(f"model {cfg.model!r} cannot be fitted on flat features")


def _cnn_config(cfg: PipelineConfig, topology: str) -> CnnConfig:
    return CnnConfig(
        filters=cfg.cnn_filters,
        topology=topology,
        out_steps=27,
        max_epochs=cfg.cnn_max_epochs,
        patience=cfg.cnn_patience,
    )


def run_persistence(cfg: PipelineConfig, matrix: DailyMatrix) -> ForecastReport:
    started = time.perf_counter()
    train, test = split_dataset(matrix, cfg.train_days)
    predictions = np.vstack(
        [persistence_forecast(matrix.values, cfg.train_days + j) for j in range(test.n_days)]
    )
    elapsed = time.perf_counter() - started
    ctx = MetricsContext.from_training(train.values)
    return ForecastReport(
        config=cfg,
        predictions=predictions,
        actuals=test.values.copy(),
        target_dates=test.dates,
        metrics=compute_metrics(predictions, test.values, ctx),
        fitted_model_count=0,
        wall_time_s=elapsed,
    )


def run_coefficients(cfg: PipelineConfig, matrix: DailyMatrix) -> ForecastReport:
    """The mc / mi routes plus the raw-feature bypass: one model, all bands."""
    started = time.perf_counter()
    samples = transform_daily(matrix, cfg)
    train_mask, test_mask = _split_samples(samples, cfg.train_days)
    feats = samples.features.values
    x_train, x_test = feats[train_mask], feats[test_mask]
    y_train = samples.targets[train_mask]

    feat_params = fit_normalizer(x_train.reshape(x_train.shape[0], -1))
    target_params = fit_normalizer(y_train, per_feature=False)
    y_norm = normalize(y_train, target_params)

    if cfg.model == "cnn":
        x_norm = normalize(
            x_train.reshape(x_train.shape[0], -1), feat_params
        ).reshape(x_train.shape)
        tr, va = _chronological_validation(x_norm.shape[0], cfg.validation_fraction)
        topology = "mi" if cfg.approach == "mi" else "mc"
        model, _ = fit_cnn(
            _cnn_config(cfg, topology),
            (x_norm[tr], y_norm[tr]),
            (x_norm[va], y_norm[va]),
            seed=cfg.seed,
        )
        x_test_norm = normalize(
            x_test.reshape(x_test.shape[0], -1), feat_params
        ).reshape(x_test.shape)
        pred_norm = _predict_rows(model, x_test_norm)
        count = model.fitted_model_count
    else:
        x_norm = normalize(x_train.reshape(x_train.shape[0], -1), feat_params)
        model = _fit_flat_model(cfg, x_norm, y_norm)
        x_test_norm = normalize(x_test.reshape(x_test.shape[0], -1), feat_params)
        pred_norm = _predict_rows(model, x_test_norm)
        count = model.fitted_model_count

    predictions = denormalize(pred_norm, target_params)
    elapsed = time.perf_counter() - started

    actuals = samples.targets[test_mask]
    target_days = samples.day_index[test_mask] + 1
    ctx = MetricsContext.from_training(matrix.values[: cfg.train_days])
    return ForecastReport(
        config=cfg,
        predictions=predictions,
        actuals=actuals.copy(),
        target_dates=tuple(matrix.dates[d] for d in target_days),
        metrics=compute_metrics(predictions, actuals, ctx),
        fitted_model_count=count,
        wall_time_s=elapsed,
    )


def run_components(cfg: PipelineConfig, matrix: DailyMatrix) -> ForecastReport:
    """The mm route: per-component models, detail components always linear.

    Forecasts are recombined by summation, which is exact because the
    components add up to the signal by construction.
    """
    started = time.perf_counter()
    samples = transform_daily(matrix, cfg)
    train_mask, test_mask = _split_samples(samples, cfg.train_days)
    feats = samples.features.values
    comp_targets = samples.component_targets
    n_bands = feats.shape[2]

    total = np.zeros((int(test_mask.sum()), feats.shape[1]))
    count = 0
    for band in range(n_bands):
        x_train = feats[train_mask, :, band]
        y_train = comp_targets[train_mask, :, band]
        x_test = feats[test_mask, :, band]
        feat_params = fit_normalizer(x_train)
        target_params = fit_normalizer(y_train, per_feature=False)
        x_norm = normalize(x_train, feat_params)
        y_norm = normalize(y_train, target_params)
        x_test_norm = normalize(x_test, feat_params)
        if band == 0 and cfg.model == "cnn":
            tr, va = _chronological_validation(x_norm.shape[0], cfg.validation_fraction)
            model, _ = fit_cnn(
                _cnn_config(cfg, "mc"),
                (x_norm[tr][:, :, None], y_norm[tr]),
                (x_norm[va][:, :, None], y_norm[va]),
                seed=cfg.seed,
            )
            pred_norm = _predict_rows(model, x_test_norm[:, :, None])
        elif band == 0 and cfg.model == "rf":
            model = fit_mimo_forest(
                x_norm, y_norm, ForestConfig(n_estimators=cfg.rf_estimators, seed=cfg.seed)
            )
            pred_norm = _predict_rows(model, x_test_norm)
        else:
            model = fit_mimo_linear(x_norm, y_norm)
            pred_norm = _predict_rows(model, x_test_norm)
        count += model.fitted_model_count
        total += denormalize(pred_norm, target_params)
    elapsed = time.perf_counter() - started

    actuals = samples.targets[test_mask]
    target_days = samples.day_index[test_mask] + 1
    ctx = MetricsContext.from_training(matrix.values[: cfg.train_days])
    return ForecastReport(
        config=cfg,
        predictions=total,
        actuals=actuals.copy(),
        target_dates=tuple(matrix.dates[d] for d in target_days),
        metrics=compute_metrics(total, actuals, ctx),
        fitted_model_count=count,
        wall_time_s=elapsed,
    )


def run_pipeline(cfg: PipelineConfig, matrix: DailyMatrix) -> ForecastReport:
    cfg.validate()
    if cfg.model == "persistence":
        return run_persistence(cfg, matrix)
    if cfg.approach == "mm":
        return run_components(cfg, matrix)
    return run_coefficients(cfg, matrix)


@dataclass(frozen=True)
class SweepCell:
    config: PipelineConfig
    report: ForecastReport | None
    error: str | None

    @property
    def ok(self) -> bool:
        return self.error is None


def make_grid(
    models,
    approaches,
    orders,
    levels,
    paddings,
    base: PipelineConfig | None = None,
    root_seed: int = 0,
) -> list[PipelineConfig]:
    """Cartesian sweep grid with deterministic per-cell seeds.

    Invalid combinations (the branches architecture with a non-network
    model) are skipped rather than generated.
    """
    base = base or PipelineConfig(model="lr")
    cells = []
    index = 0
    for model in models:
        for approach in approaches:
            if approach == "mi" and model != "cnn":
                continue
            for order in orders:
                for level in levels:
                    for padding in paddings:
                        cells.append(
                            replace(
                                base,
                                model=model,
                                approach=approach,
                                wavelet_order=order,
                                level=level,
                                padding=padding,
                                seed=root_seed * 100003 + index,
                            )
                        )
                        index += 1
    return cells


def sweep_settings(
    configs: list[PipelineConfig], matrix: DailyMatrix, jobs: int = 1
) -> list[SweepCell]:
    """Run every cell, recording failures without aborting the sweep."""

    def _run(cfg: PipelineConfig) -> SweepCell:
        try:
            return SweepCell(config=cfg, report=run_pipeline(cfg, matrix), error=None)
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            return SweepCell(config=cfg, report=None, error=f"{type(exc).__name__}: {exc}")

    if jobs <= 1:
        return [_run(cfg) for cfg in configs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run, configs))


_METRIC_COLUMNS = ("mae", "rmse", "rae", "mre_pct", "rrse", "r2", "r2_standard")


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def write_predictions_csv(report: ForecastReport, path) -> None:
    """One row per day and step: date, step label, actual MW, predicted MW."""
    labels = step_labels()
    lines = ["date,step,actual_mw,predicted_mw"]
    for d, day in enumerate(report.target_dates):
        for t, label in enumerate(labels[: report.predictions.shape[1]]):
            lines.append(
                f"{day.isoformat()},{label},"
                f"{float(report.actuals[d, t])!r},{float(report.predictions[d, t])!r}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_metrics_json(report: ForecastReport, path, include_timing: bool = False) -> None:
    """Metrics + config as JSON; timing excluded by default for reproducibility."""
    Path(path).write_text(
        json.dumps(report.to_dict(include_timing=include_timing), sort_keys=True, indent=2)
        + "\n"
    )


def write_sweep_csv(cells: list[SweepCell], path) -> None:
    header = (
        "model,approach,wavelet,level,padding,seed,status,"
        + ",".join(_METRIC_COLUMNS)
        + ",fitted_model_count,wall_time_s,error"
    )
    lines = [header]
    for cell in cells:
        cfg = cell.config
        prefix = (
            f"{cfg.model},{cfg.approach},"
            f"{'' if cfg.wavelet_order is None else cfg.wavelet_order},"
            f"{'' if cfg.level is None else cfg.level},{cfg.padding},{cfg.seed}"
        )
        if cell.ok:
            m = cell.report.metrics.to_dict()
            lines.append(
                prefix
                + ",ok,"
                + ",".join(_fmt(m[k]) for k in _METRIC_COLUMNS)
                + f",{cell.report.fitted_model_count},{cell.report.wall_time_s!r},"
            )
        else:
            message = cell.error.replace(",", ";").replace("\n", " ")
            lines.append(prefix + ",failed," + "," * len(_METRIC_COLUMNS) + f",,{message}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_timing_summary_csv(cells: list[SweepCell], path) -> None:
    """Mean wall time per (model, approach, level, padding) over ok cells."""
    groups: dict[tuple, list[float]] = {}
    for cell in cells:
        if not cell.ok:
            continue
        cfg = cell.config
        key = (cfg.model, cfg.approach, cfg.level, cfg.padding)
        groups.setdefault(key, []).append(cell.report.wall_time_s)
    lines = ["model,approach,level,padding,mean_wall_time_s,cells"]
    for key in sorted(groups, key=lambda k: tuple(str(part) for part in k)):
        times = groups[key]
        lines.append(
            f"{key[0]},{key[1]},{key[2]},{key[3]},{float(np.mean(times))!r},{len(times)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
