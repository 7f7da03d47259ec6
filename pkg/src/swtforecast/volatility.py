"""Historical volatility of log returns, intra-day and trans-day.

Volatility is the (N-1)-normalized standard deviation of lag-h log returns
over consecutive windows, averaged across windows.  Two groupings cover the
two cases of interest:

* samples grouping (intra-day, h=1): the raw series is cut into windows of
  ``window`` samples (one day each) and returns are computed inside each
  window, so the overnight jump between days never enters a window;
* returns grouping (trans-day, h=27): the lag-27 return series, which
  compares the same time step on consecutive days, is cut into windows of
  ``window`` returns.

Values below ``floor`` MW are raised to the floor before taking logs; the
number of floored samples is reported alongside the table because the data
contain occasional near-zero daytime readings.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

DEFAULT_FLOOR_MW = 0.1
YEAR_DAYS = 365


def log_returns(series, h: int) -> np.ndarray:
    """ret[t] = ln(P_t) - ln(P_{t-h}); output has length len(series) - h."""
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 1:
        raise ShapeError(f"series must be one-dimensional, got shape {arr.shape}")
    if h < 1:
        raise ValueError(f"lag must be >= 1, got {h}")
    bad = np.flatnonzero(arr <= 0)
    if bad.size:
        raise DomainError(f"non-positive value at index {bad[0]}; apply a floor first")
    if h >= arr.size:
        return np.empty(0)
    logs = np.log(arr)
    return logs[h:] - logs[:-h]


def _window_std(chunks: list[np.ndarray]) -> list[float]:
    out = []
    for chunk in chunks:
        if chunk.size < 2:
            warnings.warn("window with fewer than 2 returns skipped", stacklevel=3)
            continue
        out.append(float(np.std(chunk, ddof=1)))
    return out


def historical_volatility(
    series, h: int, window: int, group: str = "samples"
) -> tuple[list[float], float]:
    """Per-window volatilities and their unweighted mean.

    ``group="samples"`` windows the raw series (requires window > h);
    ``group="returns"`` windows the lag-h return series.
    """
    arr = np.asarray(series, dtype=float)
    if group == "samples":
        if window <= h:
            raise ValueError(f"samples grouping needs window > lag ({window} <= {h})")
        chunks = [
            log_returns(arr[start : start + window], h)
            for start in range(0, arr.size, window)
        ]
    elif group == "returns":
        rets = log_returns(arr, h)
        chunks = [rets[start : start + window] for start in range(0, rets.size, window)]
    else:
        raise ValueError(f"group must be 'samples' or 'returns', got {group!r}")
    sigmas = _window_std(chunks)
    if not sigmas:
        raise ShapeError("no window produced at least 2 returns")
    return sigmas, float(np.mean(sigmas))


@dataclass(frozen=True)
class VolatilityReport:
    """Intra-day and trans-day volatility per series, reported x100.

    Column order matches ``names``; the aggregate column is whatever the
    caller appends (conventionally last, labelled "state").
    """

    names: list[str]
    sigma_intra: list[float]
    sigma_trans: list[float]
    floored_samples: list[int]
    steps_per_day: int

    def to_csv(self, path) -> None:
        lines = [
            "statistic," + ",".join(self.names),
            "sigma_intra," + ",".join(repr(v) for v in self.sigma_intra),
            "sigma_trans," + ",".join(repr(v) for v in self.sigma_trans),
            "floored_samples," + ",".join(str(v) for v in self.floored_samples),
        ]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def volatility_table(
    named_series: list[tuple[str, np.ndarray]],
    steps_per_day: int = 27,
    floor: float = DEFAULT_FLOOR_MW,
    year_days: int = YEAR_DAYS,
) -> VolatilityReport:
    """Intra-day (h=1) and trans-day (h=steps) volatility for each series.

    Each input is a flattened day-major series; only the first
    ``year_days`` days are evaluated.  Values are scaled by 100 to match the
    usual percent-style reporting of volatility tables.
    """
    names, intra, trans, floored = [], [], [], []
    for name, series in named_series:
        arr = np.asarray(series, dtype=float).ravel()
        arr = arr[: year_days * steps_per_day]
        n_floored = int(np.sum(arr < floor))
        arr = np.maximum(arr, floor)
        _, sigma_1 = historical_volatility(arr, 1, steps_per_day, group="samples")
        _, sigma_t = historical_volatility(arr, steps_per_day, steps_per_day, group="returns")
        names.append(name)
        intra.append(100.0 * sigma_1)
        trans.append(100.0 * sigma_t)
        floored.append(n_floored)
    return VolatilityReport(
        names=names,
        sigma_intra=intra,
        sigma_trans=trans,
        floored_samples=floored,
        steps_per_day=steps_per_day,
    )
