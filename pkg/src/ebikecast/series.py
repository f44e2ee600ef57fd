"""Elementary time-series transforms: log, differencing, rolling windows, ACF."""
from __future__ import annotations

from typing import Literal, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import SeriesError
from .ingest import MonthlySeries

RollingStat = Literal["mean", "std", "sum"]


def log_transform(s: MonthlySeries) -> MonthlySeries:
    """Natural log of every value; all values must be strictly positive."""
    if np.any(s.values <= 0):
        bad = next(k for k, v in s if v <= 0)
        raise SeriesError(f"log of non-positive value at {bad}")
    return s.with_values(np.log(s.values))


def difference(s: Sequence[float], order: int) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``order`` first differences.

    Returns the differenced values and an anchor holding the first element of
    the series at each differencing level, which is what :func:`undifference`
    needs to rebuild the input.
    """
    x = np.asarray(s, dtype=float)
    if order < 0:
        raise SeriesError("differencing order must be >= 0")
    if len(x) <= order:
        raise SeriesError(f"series of length {len(x)} too short for order {order}")
    anchor = np.empty(order)
    for k in range(order):
        anchor[k] = x[0]
        x = np.diff(x)
    return x, anchor


def undifference(d: Sequence[float], anchor: Sequence[float], order: int | None = None) -> np.ndarray:
    """Inverse of :func:`difference`.

    The differencing order defaults to ``len(anchor)``; pass ``order`` to have
    a mismatched anchor rejected.
    """
    x = np.asarray(d, dtype=float)
    a = np.asarray(anchor, dtype=float)
    if a.ndim != 1:
        raise SeriesError("anchor must be one-dimensional")
    if order is not None and len(a) != order:
        raise SeriesError(f"anchor length {len(a)} does not match differencing order {order}")
    for start in a[::-1]:
        x = np.concatenate(([start], start + np.cumsum(x)))
    return x


def rolling(s: Sequence[float], window: int, stat: RollingStat) -> np.ndarray:
    """Trailing-window statistic aligned to the window end (no padding).

    ``std`` uses the sample divisor ``window - 1``.
    """
    x = np.asarray(s, dtype=float)
    if not 1 <= window <= len(x):
        raise SeriesError(f"window {window} outside [1, {len(x)}]")
    views = sliding_window_view(x, window)
    if stat == "sum":
        return views.sum(axis=1)
    if stat == "mean":
        return views.mean(axis=1)
    if stat == "std":
        if window < 2:
            raise SeriesError("rolling std needs window >= 2")
        return views.std(axis=1, ddof=1)
    raise SeriesError(f"unknown rolling statistic {stat!r}")


def autocorrelation(s: Sequence[float], max_lag: int) -> np.ndarray:
    """Sample autocorrelations r_1..r_max_lag (divisor-n, shared mean)."""
    x = np.asarray(s, dtype=float)
    n = len(x)
    if n < 2:
        raise SeriesError("autocorrelation needs at least 2 observations")
    if not 1 <= max_lag < n:
        raise SeriesError(f"max_lag must be in [1, {n - 1}]")
    if np.ptp(x) == 0:
        raise SeriesError("autocorrelation undefined for a constant series")
    dev = x - x.mean()
    denom = dev @ dev
    return np.array([dev[: n - j] @ dev[j:] for j in range(1, max_lag + 1)]) / denom
