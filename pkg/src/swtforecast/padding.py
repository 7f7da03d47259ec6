"""Two-sided signal extension before the stationary transform.

A daily signal is framed as ``[left | core | right]``: the left region is
the literal previous day, the core is the day being decomposed, and the
right region suppresses border distortion at the forecast edge.  The right
side is filled either by repeating the core day (training-free) or with the
next-day prediction of an incrementally refitted linear extrapolator.

The planned total length is ``P = len(H) + len(S) + F + 2**(DL-1) - 1``;
because that value is not always divisible by ``2**DL`` (which the
stationary transform requires), :func:`align_to_swt` rounds it up to the
next multiple and the extra samples are appended on the right using the
active padding rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotFittedError, ShapeError
from .wavelets import FilterPair

PADDER_WARMUP_DAYS = 14


@dataclass(frozen=True)
class PaddingPlan:
    """Region lengths for one padded signal."""

    len_h: int
    len_s: int
    filter_len: int
    level: int
    total: int
    right_len: int

    @property
    def aligned_total(self) -> int:
        return align_to_swt(self)

    @property
    def aligned_right_len(self) -> int:
        return self.right_len + (self.aligned_total - self.total)


@dataclass(frozen=True)
class PaddedSignal:
    """Extended signal with recorded region offsets.

    ``values[core_off:right_off]`` is the unmodified core day; the region
    offsets partition ``[0, len(values))`` as left / core / right.
    """

    values: np.ndarray
    left_off: int
    core_off: int
    right_off: int
    method: str

    @property
    def core(self) -> np.ndarray:
        return self.values[self.core_off : self.right_off]


def padding_plan(len_h: int, len_s: int, f: FilterPair, level: int) -> PaddingPlan:
    """Plan region lengths: total is len(H) + len(S) + F + 2**(DL-1) - 1."""
    if len_h <= 0 or len_s <= 0 or level <= 0:
        raise ValueError("len_h, len_s and level must all be positive")
    right = f.length + 2 ** (level - 1) - 1
    return PaddingPlan(
        len_h=len_h,
        len_s=len_s,
        filter_len=f.length,
        level=level,
        total=len_h + len_s + right,
        right_len=right,
    )


def align_to_swt(plan: PaddingPlan) -> int:
    """Smallest length >= plan.total that is divisible by 2**level."""
    block = 2**plan.level
    return -(-plan.total // block) * block


def _check_day(day, expected: int, name: str) -> np.ndarray:
    arr = np.asarray(day, dtype=float)
    if arr.shape != (expected,):
        raise ShapeError(f"{name} must have shape ({expected},), got {arr.shape}")
    return arr


def _assemble(prev_day: np.ndarray, core_day: np.ndarray, right: np.ndarray, method: str) -> PaddedSignal:
    values = np.concatenate([prev_day, core_day, right])
    return PaddedSignal(
        values=values,
        left_off=0,
        core_off=prev_day.size,
        right_off=prev_day.size + core_day.size,
        method=method,
    )


def pad_rep(prev_day, core_day, plan: PaddingPlan) -> PaddedSignal:
    """Repetition padding: the right side repeats the core day from its start.

    Deterministic and training-free; the repeated samples wrap cyclically if
    the right region is longer than one day.
    """
    prev = _check_day(prev_day, plan.len_h, "prev_day")
    core = _check_day(core_day, plan.len_s, "core_day")
    n_right = plan.aligned_right_len
    reps = -(-n_right // core.size)
    right = np.tile(core, reps)[:n_right]
    return _assemble(prev, core, right, "rep")


def pad_lr(padder: "LinearPadder", prev_day, core_day, plan: PaddingPlan) -> PaddedSignal:
    """Extrapolation padding: the right side is the padder's next-day prediction.

    The padder forecasts a full day from the core day; the first
    ``right_len`` predicted samples (plus any alignment extension) fill the
    right region.  Left and core regions are identical to :func:`pad_rep`.
    """
    prev = _check_day(prev_day, plan.len_h, "prev_day")
    core = _check_day(core_day, plan.len_s, "core_day")
    predicted = padder.predict_next(core)
    n_right = plan.aligned_right_len
    if n_right > predicted.size:
        reps = -(-n_right // predicted.size)
        predicted = np.tile(predicted, reps)
    return _assemble(prev, core, predicted[:n_right], "lr")


class LinearPadder:
    """Per-time-step linear next-day extrapolator.

    One ordinary-least-squares model per time step maps the previous day's
    full vector to that step's next-day value.  The padder is refit from
    scratch on every update, which keeps the contract independent of any
    incremental-update algebra.  Instances are cheap, stateful values: clone
    before sharing across threads.
    """

    def __init__(self, steps: int = 27):
        self.steps = steps
        self._days: list[np.ndarray] = []
        self._weights: np.ndarray | None = None  # (steps + 1, steps)

    @property
    def fitted(self) -> bool:
        return self._weights is not None

    @property
    def n_days(self) -> int:
        return len(self._days)

    def fit(self, days) -> "LinearPadder":
        """Fit on consecutive days; requires the 14-day warm-up minimum."""
        days = [np.asarray(d, dtype=float) for d in days]
        for d in days:
            if d.shape != (self.steps,):
                raise ShapeError(f"each day must have shape ({self.steps},)")
        if len(days) < PADDER_WARMUP_DAYS:
            raise ValueError(
                f"padder needs at least {PADDER_WARMUP_DAYS} days, got {len(days)}"
            )
        self._days = days
        self._refit()
        return self

    def update(self, new_day) -> "LinearPadder":
        """Append one observed day and refit on all accumulated pairs."""
        if not self.fitted:
            raise NotFittedError("update called before fit")
        day = np.asarray(new_day, dtype=float)
        if day.shape != (self.steps,):
            raise ShapeError(f"new_day must have shape ({self.steps},)")
        self._days.append(day)
        self._refit()
        return self

    def predict_next(self, day) -> np.ndarray:
        """Predicted next day given the current day's values."""
        if not self.fitted:
            raise NotFittedError("padder has not been fitted")
        day = np.asarray(day, dtype=float)
        if day.shape != (self.steps,):
            raise ShapeError(f"day must have shape ({self.steps},)")
        return np.concatenate([day, [1.0]]) @ self._weights

    def clone(self) -> "LinearPadder":
        other = LinearPadder(self.steps)
        other._days = [d.copy() for d in self._days]
        other._weights = None if self._weights is None else self._weights.copy()
        return other

    def _refit(self) -> None:
        from .models.linear import ridge_solve

        stacked = np.vstack(self._days)
        x, y = stacked[:-1], stacked[1:]
        design = np.hstack([x, np.ones((x.shape[0], 1))])
        self._weights = ridge_solve(design, y)


def update_padder(padder: LinearPadder, new_day) -> LinearPadder:
    """Functional alias for :meth:`LinearPadder.update`."""
    return padder.update(new_day)
