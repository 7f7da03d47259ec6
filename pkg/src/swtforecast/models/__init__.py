"""MIMO prediction models: persistence, per-step linear, per-step forest, CNN."""

from .baseline import PersistenceModel, persistence_forecast
from .cnn import CnnConfig, ConvNet, TrainingHistory, fit_cnn, gradient_check
from .forest import (
    ForestConfig,
    ForestMimo,
    ForestRegressor,
    fit_mimo_forest,
    fit_random_forest_step,
)
from .io import load_model, save_model
from .linear import LinearMimo, fit_mimo_linear, ridge_solve
from .normalization import (
    NormalizationParams,
    denormalize,
    fit_normalizer,
    normalize,
)

__all__ = [
    "CnnConfig",
    "ConvNet",
    "ForestConfig",
    "ForestMimo",
    "ForestRegressor",
    "LinearMimo",
    "NormalizationParams",
    "PersistenceModel",
    "TrainingHistory",
    "denormalize",
    "fit_cnn",
    "fit_mimo_forest",
    "fit_mimo_linear",
    "fit_normalizer",
    "fit_random_forest_step",
    "gradient_check",
    "load_model",
    "normalize",
    "persistence_forecast",
    "ridge_solve",
    "save_model",
]
