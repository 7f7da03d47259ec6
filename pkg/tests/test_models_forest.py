import numpy as np
import pytest

from swtforecast.errors import ShapeError
from swtforecast.models import (
    ForestConfig,
    ForestRegressor,
    fit_mimo_forest,
    fit_random_forest_step,
    load_model,
    save_model,
)


def test_constant_targets(rng):
    x = rng.normal(size=(20, 3))
    y = np.full(20, 2.5)
    model = fit_random_forest_step(x, y, ForestConfig(n_estimators=7, seed=1))
    assert np.allclose(model.predict(x), 2.5)


def test_single_tree_memorizes_unique_features(rng):
    x = rng.normal(size=(40, 5))
    y = rng.normal(size=40)
    model = fit_random_forest_step(x, y, ForestConfig(n_estimators=1, bootstrap=False))
    assert np.array_equal(model.predict(x), y)


def test_same_seed_same_forest(rng):
    x = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    cfg = ForestConfig(n_estimators=6, seed=99)
    a = fit_random_forest_step(x, y, cfg)
    b = fit_random_forest_step(x, y, cfg)
    probe = rng.normal(size=(10, 4))
    assert np.array_equal(a.predict(probe), b.predict(probe))
    assert a.to_dict() == b.to_dict()


def test_tree_order_permutation_invariance(rng):
    x = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    model = fit_random_forest_step(x, y, ForestConfig(n_estimators=8, seed=3))
    reversed_model = ForestRegressor(model._trees[::-1], model.n_features, model.config)
    probe = rng.normal(size=(10, 4))
    assert np.allclose(model.predict(probe), reversed_model.predict(probe), atol=1e-12)


def test_requires_two_samples(rng):
    with pytest.raises(ShapeError):
        fit_random_forest_step(rng.normal(size=(1, 2)), np.ones(1))


def test_mimo_forest_counts_and_shapes(rng):
    x = rng.normal(size=(25, 6))
    y = rng.normal(size=(25, 27))
    model = fit_mimo_forest(x, y, ForestConfig(n_estimators=2, seed=0))
    assert model.fitted_model_count == 27
    assert model.predict(x).shape == (25, 27)


def test_save_load_round_trip(rng, tmp_path):
    x = rng.normal(size=(20, 3))
    y = rng.normal(size=20)
    model = fit_random_forest_step(x, y, ForestConfig(n_estimators=3, seed=5))
    save_model(model, tmp_path / "forest.json")
    loaded, _ = load_model(tmp_path / "forest.json")
    probe = rng.normal(size=(8, 3))
    assert np.array_equal(model.predict(probe), loaded.predict(probe))
