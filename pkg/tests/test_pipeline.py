import json
from datetime import date, timedelta

import numpy as np
import pytest

from swtforecast.data import DailyMatrix, synthesize_pv, aggregate_sites
from swtforecast.errors import ConfigError, DataError
from swtforecast.pipeline import (
    FeatureTensor,
    PipelineConfig,
    first_feature_day,
    make_grid,
    run_pipeline,
    split_dataset,
    sweep_settings,
    transform_daily,
    write_metrics_json,
    write_predictions_csv,
    write_sweep_csv,
    write_timing_summary_csv,
)

pytestmark = pytest.mark.filterwarnings("ignore:constant feature")


def _flat_matrix(days=80, level=30.0):
    values = np.full((days, 27), level)
    dates = tuple(date(2019, 1, 1) + timedelta(days=i) for i in range(days))
    return DailyMatrix(values, dates)


def test_config_validation_aggregates_violations():
    cfg = PipelineConfig(model="svr", approach="mi", wavelet_order=9, level=None)
    with pytest.raises(ConfigError) as info:
        cfg.validate()
    message = str(info.value)
    assert "model" in message and "wavelet_order" in message and "level" in message


def test_mi_requires_cnn():
    cfg = PipelineConfig(model="lr", approach="mi", wavelet_order=2, level=1)
    with pytest.raises(ConfigError, match="multiple-inputs"):
        cfg.validate()


def test_split_dataset_counts(synthetic_matrix):
    padded = synthetic_matrix.take_days(0, 400)
    train, test = split_dataset(padded, train_days=365)
    assert train.n_days == 365 and test.n_days == 35
    assert train.dates + test.dates == padded.dates
    dates_494 = tuple(date(2019, 1, 1) + timedelta(days=i) for i in range(494))
    big = DailyMatrix(np.ones((494, 27)), dates_494)
    train, test = split_dataset(big)
    assert train.n_days == 365 and test.n_days == 129
    train, test = split_dataset(big.take_days(0, 366))
    assert test.n_days == 1
    with pytest.raises(DataError):
        split_dataset(big.take_days(0, 365))


def test_transform_raw_bypass(synthetic_matrix):
    cfg = PipelineConfig(model="lr", train_days=365)
    samples = transform_daily(synthetic_matrix, cfg)
    assert samples.features.n_coeff == 1
    assert np.array_equal(samples.features.values[:, :, 0], synthetic_matrix.values[:-1])
    assert np.array_equal(samples.targets, synthetic_matrix.values[1:])


def test_transform_band_count(synthetic_matrix):
    cfg = PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=1, train_days=365)
    samples = transform_daily(synthetic_matrix, cfg)
    assert samples.features.n_coeff == 2
    cfg4 = PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=4, train_days=365)
    assert transform_daily(synthetic_matrix, cfg4).features.n_coeff == 5


@pytest.mark.parametrize("padding", ["rep", "lr"])
def test_transform_is_causal(synthetic_matrix, padding):
    cfg = PipelineConfig(
        model="lr", approach="mc", wavelet_order=3, level=2, padding=padding, train_days=365
    )
    full = transform_daily(synthetic_matrix, cfg)
    probe_day = 200
    cut = DailyMatrix(
        synthetic_matrix.values[: probe_day + 1], synthetic_matrix.dates[: probe_day + 1]
    )
    partial = transform_daily(
        DailyMatrix(
            np.vstack([cut.values, np.zeros((1, 27))]),
            cut.dates + (synthetic_matrix.dates[probe_day + 1],),
        ),
        cfg,
    )
    i_full = int(np.flatnonzero(full.day_index == probe_day)[0])
    i_cut = int(np.flatnonzero(partial.day_index == probe_day)[0])
    assert np.array_equal(
        full.features.values[i_full], partial.features.values[i_cut]
    )


def test_first_feature_day():
    assert first_feature_day(PipelineConfig(model="lr")) == 0
    assert (
        first_feature_day(PipelineConfig(model="lr", approach="mc", wavelet_order=1, level=1))
        == 1
    )
    assert (
        first_feature_day(
            PipelineConfig(model="lr", approach="mc", wavelet_order=1, level=1, padding="lr")
        )
        == 14
    )


def test_model_count_law(synthetic_matrix):
    mm3 = PipelineConfig(model="lr", approach="mm", wavelet_order=2, level=3, train_days=365)
    assert run_pipeline(mm3, synthetic_matrix).fitted_model_count == 108
    mc = PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=3, train_days=365)
    assert run_pipeline(mc, synthetic_matrix).fitted_model_count == 27
    raw = PipelineConfig(model="lr", train_days=365)
    assert run_pipeline(raw, synthetic_matrix).fitted_model_count == 27
    persistence = PipelineConfig(model="persistence", train_days=365)
    assert run_pipeline(persistence, synthetic_matrix).fitted_model_count == 0


def test_cnn_model_counts(synthetic_matrix):
    small = dict(cnn_filters=4, cnn_max_epochs=2, cnn_patience=2, train_days=365)
    mc = PipelineConfig(model="cnn", approach="mc", wavelet_order=1, level=1, **small)
    assert run_pipeline(mc, synthetic_matrix).fitted_model_count == 1
    mi = PipelineConfig(model="cnn", approach="mi", wavelet_order=1, level=1, **small)
    assert run_pipeline(mi, synthetic_matrix).fitted_model_count == 1
    mm = PipelineConfig(model="cnn", approach="mm", wavelet_order=1, level=2, **small)
    assert run_pipeline(mm, synthetic_matrix).fitted_model_count == 1 + 2 * 27


def test_constant_days_mc_lr_is_exact():
    matrix = _flat_matrix()
    cfg = PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=1, train_days=60)
    report = run_pipeline(cfg, matrix)
    assert report.metrics.mae < 1e-9


def test_constant_days_mm_equals_mc():
    matrix = _flat_matrix()
    mc = PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=2, train_days=60)
    mm = PipelineConfig(model="lr", approach="mm", wavelet_order=2, level=2, train_days=60)
    pred_mc = run_pipeline(mc, matrix).predictions
    pred_mm = run_pipeline(mm, matrix).predictions
    assert np.max(np.abs(pred_mc - pred_mm)) < 1e-6


def test_persistence_route(synthetic_matrix):
    cfg = PipelineConfig(model="persistence", train_days=365)
    report = run_pipeline(cfg, synthetic_matrix)
    assert np.array_equal(report.predictions, synthetic_matrix.values[364:-1])
    assert np.array_equal(report.actuals, synthetic_matrix.values[365:])


def test_reports_reproducible_bit_for_bit(synthetic_matrix):
    cfg = PipelineConfig(
        model="rf", approach="mc", wavelet_order=2, level=1, train_days=365, rf_estimators=3
    )
    a = run_pipeline(cfg, synthetic_matrix)
    b = run_pipeline(cfg, synthetic_matrix)
    assert np.array_equal(a.predictions, b.predictions)
    assert a.metrics == b.metrics


def test_causality_full_vs_truncated(synthetic_matrix):
    cfg = PipelineConfig(model="lr", approach="mc", wavelet_order=3, level=2, train_days=365)
    full = run_pipeline(cfg, synthetic_matrix)
    target_day = 380
    cut = DailyMatrix(
        synthetic_matrix.values[: target_day + 1], synthetic_matrix.dates[: target_day + 1]
    )
    partial = run_pipeline(cfg, cut)
    j = target_day - 365
    assert np.array_equal(full.predictions[j], partial.predictions[-1])


def test_target_dates_cover_test_region(synthetic_matrix):
    for cfg in (
        PipelineConfig(model="lr", train_days=365),
        PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=2, train_days=365),
        PipelineConfig(
            model="lr", approach="mc", wavelet_order=2, level=2, padding="lr", train_days=365
        ),
    ):
        report = run_pipeline(cfg, synthetic_matrix)
        assert report.target_dates == synthetic_matrix.dates[365:]


def test_feature_tensor_rejects_non_finite():
    with pytest.raises(DataError):
        FeatureTensor(np.array([[[np.inf]]]))


def test_make_grid_cardinality_and_seeds():
    grid = make_grid(["lr"], ["mc"], range(1, 8), range(1, 5), ["rep", "lr"], root_seed=3)
    assert len(grid) == 7 * 4 * 2
    assert len({cfg.seed for cfg in grid}) == len(grid)
    mi_grid = make_grid(["lr", "cnn"], ["mi"], [1], [1], ["rep"])
    assert [cfg.model for cfg in mi_grid] == ["cnn"]


def test_sweep_single_cell_matches_direct_run(synthetic_matrix):
    cfg = PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=1, train_days=365)
    (cell,) = sweep_settings([cfg], synthetic_matrix)
    assert cell.ok
    direct = run_pipeline(cfg, synthetic_matrix)
    assert cell.report.metrics == direct.metrics


def test_sweep_records_failures_and_continues(synthetic_matrix, tmp_path):
    good = PipelineConfig(model="lr", approach="mc", wavelet_order=1, level=1, train_days=365)
    bad = PipelineConfig(
        model="lr", approach="mc", wavelet_order=1, level=1, padding="lr", train_days=10
    )
    cells = sweep_settings([bad, good], synthetic_matrix)
    assert [c.ok for c in cells] == [False, True]
    assert "ConfigError" in cells[0].error
    write_sweep_csv(cells, tmp_path / "sweep.csv")
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3
    assert ",failed," in lines[1] and ",ok," in lines[2]
    write_timing_summary_csv(cells, tmp_path / "timing.csv")
    assert len((tmp_path / "timing.csv").read_text().splitlines()) == 2


def test_sweep_parallel_matches_serial(synthetic_matrix):
    grid = make_grid(["lr"], ["mc"], [1, 2], [1], ["rep"], root_seed=1)
    serial = sweep_settings(grid, synthetic_matrix, jobs=1)
    parallel = sweep_settings(grid, synthetic_matrix, jobs=2)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.report.predictions, b.report.predictions)


def test_predictions_csv_layout(synthetic_matrix, tmp_path):
    cfg = PipelineConfig(model="lr", train_days=395)
    report = run_pipeline(cfg, synthetic_matrix)
    path = tmp_path / "pred.csv"
    write_predictions_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "date,step,actual_mw,predicted_mw"
    assert len(lines) == 1 + report.predictions.shape[0] * 27


def test_metrics_json_deterministic(synthetic_matrix, tmp_path):
    cfg = PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=1, train_days=395)
    a = run_pipeline(cfg, synthetic_matrix)
    b = run_pipeline(cfg, synthetic_matrix)
    write_metrics_json(a, tmp_path / "a.json")
    write_metrics_json(b, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    payload = json.loads((tmp_path / "a.json").read_text())
    assert "wall_time_s" not in payload
    assert payload["fitted_model_count"] == 27


def test_improvement_attached_per_formula(synthetic_matrix):
    from swtforecast.pipeline import with_improvement

    baseline = run_pipeline(PipelineConfig(model="lr", train_days=365), synthetic_matrix)
    transformed = run_pipeline(
        PipelineConfig(model="lr", approach="mc", wavelet_order=4, level=2, train_days=365),
        synthetic_matrix,
    )
    report = with_improvement(transformed, baseline)
    expected = (baseline.metrics.mae - transformed.metrics.mae) / baseline.metrics.mae * 100
    assert report.improvement_pct == pytest.approx(expected, rel=1e-12)
    assert report.to_dict()["improvement_pct"] == report.improvement_pct


def test_persistence_mae_matches_seasonal_drift_oracle():
    # closed form of the noiseless generator: value[d, t] = c * bell[t] * s[d];
    # recover c from one sample, then predict the persistence MAE exactly
    (matrix,) = synthesize_pv(days=400, sites=1, seed=21, cloud_noise=0.0)
    report = run_pipeline(PipelineConfig(model="persistence", train_days=365), matrix)
    t = np.arange(27)
    bell = np.sin(np.pi * t / 26.0) ** 2
    bell[0] = bell[-1] = 0.0
    days = np.arange(400)
    seasonal = 1.0 + 0.35 * np.cos(2.0 * np.pi * days / 365.0)
    capacity = matrix.values[0, 13] / (bell[13] * seasonal[0])
    drift = np.abs(seasonal[365:] - seasonal[364:-1])
    expected = capacity * bell.mean() * drift.mean()
    assert report.metrics.mae == pytest.approx(expected, rel=1e-9)
