import numpy as np
import pytest

from swtforecast.errors import ShapeError
from swtforecast.models import fit_mimo_linear, load_model, save_model


def test_recovers_noiseless_linear_map(rng):
    x = rng.normal(size=(60, 10))
    weights = rng.normal(size=(10, 27))
    bias = rng.normal(size=27)
    y = x @ weights + bias
    model = fit_mimo_linear(x, y)
    assert model.fitted_model_count == 27
    assert np.max(np.abs(model.predict(x) - y)) < 1e-8


def test_constant_column_gives_per_step_mean(rng):
    x = np.full((40, 1), 3.0)
    y = rng.normal(size=(40, 27))
    model = fit_mimo_linear(x, y)
    pred = model.predict(np.full((1, 1), 3.0))[0]
    assert np.allclose(pred, y.mean(axis=0), atol=1e-6)


def test_duplicated_rows_leave_fit_unchanged(rng):
    x = rng.normal(size=(50, 8))
    y = rng.normal(size=(50, 27))
    base = fit_mimo_linear(x, y)
    doubled = fit_mimo_linear(np.vstack([x, x]), np.vstack([y, y]))
    probe = rng.normal(size=(5, 8))
    assert np.max(np.abs(base.predict(probe) - doubled.predict(probe))) < 1e-10


def test_duplicate_feature_column_is_harmless(rng):
    x = rng.normal(size=(50, 6))
    y = rng.normal(size=(50, 27))
    base = fit_mimo_linear(x, y)
    widened = fit_mimo_linear(np.hstack([x, x[:, :1]]), y)
    probe = rng.normal(size=(5, 6))
    probe_wide = np.hstack([probe, probe[:, :1]])
    assert np.max(np.abs(base.predict(probe) - widened.predict(probe_wide))) < 1e-8


def test_predict_shape_error(rng):
    model = fit_mimo_linear(rng.normal(size=(20, 4)), rng.normal(size=(20, 27)))
    with pytest.raises(ShapeError):
        model.predict(np.ones((3, 5)))


def test_batch_prediction_matches_single_rows(rng):
    model = fit_mimo_linear(rng.normal(size=(20, 4)), rng.normal(size=(20, 27)))
    probe = rng.normal(size=(6, 4))
    batch = model.predict(probe)
    singles = np.vstack([model.predict(row) for row in probe])
    assert np.allclose(batch, singles, rtol=0, atol=1e-12)


def test_fit_rejects_mismatched_samples(rng):
    with pytest.raises(ShapeError):
        fit_mimo_linear(rng.normal(size=(10, 3)), rng.normal(size=(9, 27)))


def test_save_load_round_trip(rng, tmp_path):
    model = fit_mimo_linear(rng.normal(size=(30, 5)), rng.normal(size=(30, 27)))
    path = tmp_path / "linear.json"
    save_model(model, path)
    loaded, norms = load_model(path)
    probe = rng.normal(size=(4, 5))
    assert np.array_equal(model.predict(probe), loaded.predict(probe))
    assert norms == {}
