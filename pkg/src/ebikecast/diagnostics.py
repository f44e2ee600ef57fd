"""Stationarity and residual diagnostics: ADF, Ljung-Box and kurtosis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DiagnosticsError, SeriesError
from .series import autocorrelation

# MacKinnon response-surface coefficients, constant-only regression, one
# variable (N = 1).
#
# p-values: MacKinnon, J.G. (1994) "Approximate asymptotic distribution
# functions for unit-root and cointegration tests", J. Business & Economic
# Statistics 12, Tables 3-4. p = Phi(sum_i c_i * tau**i), using the "small p"
# cubic left of TAU_STAR and the "large p" quartic right of it; outside
# [TAU_MIN, TAU_MAX] the p-value is clamped to 0 or 1.
_TAU_STAR = -1.61
_TAU_MIN = -18.83
_TAU_MAX = 2.74
_TAU_SMALLP = (2.1659, 1.4412, 3.8269e-2)
_TAU_LARGEP = (1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2)

# Finite-sample critical values: MacKinnon, J.G. (2010) "Critical values for
# cointegration tests", Queen's Economics Dept. WP 1227, Table 2 (constant,
# N = 1). cv(T) = b0 + b1/T + b2/T**2 + b3/T**3.
_CRIT_2010 = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}

MIN_ADF_OBS = 15


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int
    n_obs: int
    critical_values: dict[str, float]
    aic: float
    max_lag: int


@dataclass(frozen=True)
class LjungBoxResult:
    q: float
    p_value: float
    m: int
    dof: int
    autocorrelations: np.ndarray = field(repr=False, compare=False)


def mackinnon_pvalue(stat: float) -> float:
    """Approximate p-value of an ADF t-statistic (constant, no trend)."""
    if stat > _TAU_MAX:
        return 1.0
    if stat < _TAU_MIN:
        return 0.0
    coef = _TAU_SMALLP if stat <= _TAU_STAR else _TAU_LARGEP
    z = sum(c * stat**i for i, c in enumerate(coef))
    return float(stats.norm.cdf(z))


def mackinnon_critical_values(n_obs: int) -> dict[str, float]:
    return {k: b[0] + b[1] / n_obs + b[2] / n_obs**2 + b[3] / n_obs**3 for k, b in _CRIT_2010.items()}


def default_adf_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _adf_design(y: np.ndarray, lags: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Regression of dy_t on [1, y_{t-1}, dy_{t-1}, ..., dy_{t-lags}] for t >= start.

    ``t`` indexes the differenced series, so the lagged level of ``dy[t]`` is ``y[t]``.
    """
    dy = np.diff(y)
    rows = np.arange(start, len(dy))
    cols = [np.ones(len(rows)), y[rows]]
    cols.extend(dy[rows - i] for i in range(1, lags + 1))
    return np.column_stack(cols), dy[rows]


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    beta, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    if rank < x.shape[1]:
        raise DiagnosticsError("singular ADF regression (is the series constant?)")
    resid = y - x @ beta
    return beta, resid, float(resid @ resid)


def adf_test(s: Sequence[float], max_lag: int | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test with a constant and AIC lag selection.

    Every lag order 0..max_lag is fitted on the same trimmed sample so the AIC
    values are comparable; the chosen order is then refitted on all usable
    observations to produce the reported statistic.
    """
    y = np.asarray(s, dtype=float)
    n = len(y)
    if not np.all(np.isfinite(y)):
        raise DiagnosticsError("series contains non-finite values")
    if max_lag is None:
        max_lag = max(0, min(default_adf_max_lag(n), n // 2 - 2))
    if max_lag < 0:
        raise DiagnosticsError("max_lag must be non-negative")
    if n - 1 - max_lag < MIN_ADF_OBS:
        raise DiagnosticsError(f"series too short for ADF: {n} observations with max_lag {max_lag}")
    if np.ptp(y) == 0:
        raise DiagnosticsError("singular ADF regression: constant series")

    best_lag, best_aic = 0, math.inf
    for k in range(max_lag + 1):
        x, dy = _adf_design(y, k, max_lag)
        _, _, ssr = _ols(x, dy)
        nobs = len(dy)
        # Gaussian log-likelihood AIC; constants cancel within the common sample
        aic = nobs * math.log(ssr / nobs) + 2 * x.shape[1] if ssr > 0 else -math.inf
        if aic < best_aic:
            best_lag, best_aic = k, aic

    x, dy = _adf_design(y, best_lag, best_lag)
    beta, _, ssr = _ols(x, dy)
    nobs, k_params = x.shape
    if nobs <= k_params or ssr == 0:
        raise DiagnosticsError("ADF regression has no residual degrees of freedom")
    sigma2 = ssr / (nobs - k_params)
    cov = sigma2 * np.linalg.inv(x.T @ x)
    stat = float(beta[1] / math.sqrt(cov[1, 1]))
    return AdfResult(
        statistic=stat,
        p_value=mackinnon_pvalue(stat),
        lags_used=best_lag,
        n_obs=nobs,
        critical_values=mackinnon_critical_values(nobs),
        aic=best_aic,
        max_lag=max_lag,
    )


def ljung_box_q(r: Sequence[float], n: int) -> float:
    """Q = n(n+2) * sum_j r_j**2 / (n - j) for autocorrelations r_1..r_m."""
    r = np.asarray(r, dtype=float)
    j = np.arange(1, len(r) + 1)
    if n <= len(r):
        raise DiagnosticsError("need n > m")
    return float(n * (n + 2) * np.sum(r**2 / (n - j)))


def ljung_box(s: Sequence[float], m: int, fitted_params: int = 0) -> LjungBoxResult:
    """Portmanteau test of the first ``m`` autocorrelations.

    ``fitted_params`` (p + q for ARMA residuals) is subtracted from the
    chi-square degrees of freedom.
    """
    x = np.asarray(s, dtype=float)
    n = len(x)
    if m < 1 or m + 1 > n:
        raise DiagnosticsError(f"invalid lag count m={m} for n={n}")
    dof = m - fitted_params
    if dof <= 0:
        raise DiagnosticsError(f"non-positive degrees of freedom: m={m}, fitted_params={fitted_params}")
    try:
        r = autocorrelation(x, m)
    except SeriesError as exc:
        raise DiagnosticsError(str(exc)) from exc
    q = ljung_box_q(r, n)
    return LjungBoxResult(q=q, p_value=float(stats.chi2.sf(q, dof)), m=m, dof=dof, autocorrelations=r)


def kurtosis(s: Sequence[float], excess: bool = False) -> float:
    """sum (y - mean)**4 / (N * s**4), with s the sample standard deviation.

    With ``excess=True`` the normal reference value 3 is subtracted.
    """
    y = np.asarray(s, dtype=float)
    n = len(y)
    if n < 4:
        raise DiagnosticsError("kurtosis needs at least 4 observations")
    if np.ptp(y) == 0:
        raise DiagnosticsError("kurtosis undefined for a constant series")
    dev = y - y.mean()
    sd = np.std(y, ddof=1)
    k = float(np.sum(dev**4) / (n * sd**4))
    return k - 3.0 if excess else k
