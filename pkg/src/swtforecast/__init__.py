"""Day-ahead solar PV forecasting with stationary wavelet transform features.

The package compares two ways of feeding a shift-invariant wavelet
decomposition to day-ahead MIMO forecasting models: the traditional
components route (one model per reconstructed component) and the
coefficients route (a single model fed all coefficient bands), with common
padding, normalization, evaluation, and timing machinery.
"""

__version__ = "0.1.0"

from .data import DailyMatrix, aggregate_sites, load_csv, synthesize_pv
from .evaluation import (
    MetricsBundle,
    MetricsContext,
    compute_metrics,
    improvement,
    wilcoxon_rank_sum,
)
from .padding import LinearPadder, PaddingPlan, pad_lr, pad_rep, padding_plan
from .pipeline import (
    ForecastReport,
    PipelineConfig,
    make_grid,
    run_pipeline,
    sweep_settings,
    transform_daily,
    with_improvement,
)
from .volatility import historical_volatility, log_returns, volatility_table
from .wavelets import (
    ComponentSet,
    FilterPair,
    SwtCoefficients,
    daubechies_filters,
    dwt_single_level,
    idwt_single_level,
    iswt,
    reconstruct_components,
    swt,
)

__all__ = [
    "ComponentSet",
    "DailyMatrix",
    "FilterPair",
    "ForecastReport",
    "LinearPadder",
    "MetricsBundle",
    "MetricsContext",
    "PaddingPlan",
    "PipelineConfig",
    "SwtCoefficients",
    "__version__",
    "aggregate_sites",
    "compute_metrics",
    "daubechies_filters",
    "dwt_single_level",
    "historical_volatility",
    "idwt_single_level",
    "improvement",
    "iswt",
    "load_csv",
    "log_returns",
    "make_grid",
    "pad_lr",
    "pad_rep",
    "padding_plan",
    "reconstruct_components",
    "run_pipeline",
    "swt",
    "sweep_settings",
    "synthesize_pv",
    "transform_daily",
    "volatility_table",
    "wilcoxon_rank_sum",
    "with_improvement",
]
