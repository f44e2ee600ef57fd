"""ARIMA(p, d, q) with intercept, estimated by conditional sum of squares.

The model on the d-times differenced series ``w`` is::

    w_t = c + sum_i phi_i w_{t-i} + e_t + sum_j theta_j e_{t-j}

Residuals before the first usable observation are taken as zero, so the
recursion starts at ``t = p`` and the objective is ``sum e_t**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, signal, stats

from .errors import ArimaError, EbikecastError
from .ingest import AnnualSeries, MonthKey, MonthlySeries
from .prep import annual_totals
from .series import difference, log_transform

MAX_ORDER = 24
N_STARTS = 5
_START_SCALE = 0.1


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self) -> None:
        for name in ("p", "d", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0 or v > MAX_ORDER:
                raise ArimaError(f"order component {name}={v!r} must be an integer in [0, {MAX_ORDER}]")
        if self.p + self.q < 1 and self.d < 1:
            raise ArimaError("ARIMA(0,0,0) has nothing to estimate beyond a mean")

    @classmethod
    def parse(cls, text: str) -> "ArimaOrder":
        try:
            p, d, q = (int(t) for t in text.split(","))
        except ValueError:
            raise ArimaError(f"order must look like 'p,d,q', got {text!r}") from None
        return cls(p, d, q)

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})"


@dataclass(frozen=True, eq=False)
class ArimaModel:
    order: ArimaOrder
    phi: np.ndarray
    theta: np.ndarray
    intercept: float
    sigma2: float
    residuals: np.ndarray
    train_tail: np.ndarray
    loglik_css: float
    css: float
    n_effective: int
    converged: bool = True
    n_evaluations: int = 0

    @property
    def n_params(self) -> int:
        return self.order.p + self.order.q

    def is_stationary(self) -> bool:
        return _roots_ok(self.phi)

    def is_invertible(self) -> bool:
        return _roots_ok(-self.theta)


@dataclass(frozen=True, eq=False)
class Forecast:
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    horizon: int
    confidence: float
    start: MonthKey | None = None
    model: ArimaModel | None = field(default=None, repr=False)

    def months(self) -> list[MonthKey]:
        if self.start is None:
            raise ArimaError("forecast has no calendar anchor")
        return [self.start.shift(i) for i in range(self.horizon)]


# --- polynomial helpers ----------------------------------------------------


def _roots_ok(coefs: np.ndarray) -> bool:
    """True if 1 - sum_i a_i z**i has all roots strictly outside the unit circle."""
    a = np.asarray(coefs, dtype=float)
    if len(a) == 0:
        return True
    if len(a) == 1:
        return abs(a[0]) < 1.0
    companion = np.zeros((len(a), len(a)))
    companion[0] = a
    companion[1:, :-1] = np.eye(len(a) - 1)
    return bool(np.max(np.abs(np.linalg.eigvals(companion))) < 1.0)


def psi_weights(phi: Sequence[float], theta: Sequence[float], d: int, n: int) -> np.ndarray:
    """First ``n`` MA(infinity) weights of phi(B)(1-B)^d x_t = theta(B) e_t."""
    ar = np.concatenate(([1.0], -np.asarray(phi, dtype=float)))
    for _ in range(d):
        ar = np.convolve(ar, [1.0, -1.0])
    a = -ar[1:]
    th = np.asarray(theta, dtype=float)
    psi = np.zeros(n)
    psi[0] = 1.0
    for j in range(1, n):
        acc = th[j - 1] if j <= len(th) else 0.0
        for i in range(1, min(j, len(a)) + 1):
            acc += a[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


# --- estimation ------------------------------------------------------------


class _CssObjective:
    def __init__(self, w: np.ndarray, p: int, q: int):
        self.w, self.p, self.q = w, p, q
        n = len(w)
        self.target = w[p:]
        self.lags = np.column_stack([w[p - i : n - i] for i in range(1, p + 1)]) if p else None
        self.evaluations = 0

    def unpack(self, params: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        p, q = self.p, self.q
        return float(params[0]), np.asarray(params[1 : 1 + p]), np.asarray(params[1 + p : 1 + p + q])

    def residuals(self, params: np.ndarray) -> np.ndarray:
        c, phi, theta = self.unpack(params)
        u = self.target - c
        if self.p:
            u = u - self.lags @ phi
        if self.q:
            u = signal.lfilter([1.0], np.concatenate(([1.0], theta)), u)
        return u

    def feasible(self, params: np.ndarray) -> bool:
        _, phi, theta = self.unpack(params)
        return _roots_ok(phi) and _roots_ok(-theta)

    def __call__(self, params: np.ndarray) -> float:
        self.evaluations += 1
        if not self.feasible(params):
            return math.inf
        e = self.residuals(params)
        val = float(e @ e)
        return val if math.isfinite(val) else math.inf


def _initial_guess(w: np.ndarray, p: int, q: int) -> np.ndarray:
    """Least-squares AR(p) start with zero MA terms, shrunk until stationary."""
    phi = np.zeros(p)
    if p and len(w) > 2 * p + 1:
        n = len(w)
        x = np.column_stack([np.ones(n - p)] + [w[p - i : n - i] for i in range(1, p + 1)])
        beta, *_ = np.linalg.lstsq(x, w[p:], rcond=None)
        phi = beta[1:]
        while not _roots_ok(phi):
            phi = phi * 0.5
    c = float(np.mean(w)) * (1.0 - float(np.sum(phi)))
    return np.concatenate(([c], phi, np.zeros(q)))


def _nelder_mead(obj: _CssObjective, x0: np.ndarray, max_iter: int) -> optimize.OptimizeResult:
    k = len(x0)
    simplex = np.vstack([x0] + [x0 + _START_SCALE * np.eye(k)[i] for i in range(k)])
    # keep the simplex inside the feasible region where possible
    for i in range(1, k + 1):
        step = 1.0
        while not obj.feasible(simplex[i]) and step > 1e-4:
            step *= 0.5
            simplex[i] = x0 + step * _START_SCALE * np.eye(k)[i - 1]
    return optimize.minimize(
        obj,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxiter": max_iter,
            "maxfev": 2 * max_iter,
            "xatol": 1e-7,
            "fatol": 1e-10,
            "adaptive": k > 3,
        },
    )


def fit(s: Sequence[float], order: ArimaOrder, seed: int = 0, max_iter: int | None = None) -> ArimaModel:
    """Fit by conditional sum of squares with seeded multi-start simplex search.

    Start 0 is a least-squares AR guess; the other starts perturb it with
    draws from ``seed``. Each start is run to convergence and then restarted
    once from its own optimum. Candidates with non-stationary AR or
    non-invertible MA polynomials score +inf. The lowest objective wins, ties
    going to the lowest start index. If the winning run hit the iteration
    cap the model is still returned, with ``converged=False``.
    """
    y = np.asarray(s, dtype=float)
    p, d, q = order.p, order.d, order.q
    if not np.all(np.isfinite(y)):
        raise ArimaError("series contains non-finite values")
    if len(y) < p + q + d + 2:
        raise ArimaError(f"series of length {len(y)} too short for ARIMA{order}")
    w, _ = difference(y, d)
    tail = y[-(max(p, q) + d) :] if max(p, q) + d > 0 else y[:0]

    if p == 0 and q == 0:
        c = float(np.mean(w))
        resid = w - c
        css = float(resid @ resid)
        n_eff = len(w)
        sigma2 = css / n_eff
        if sigma2 <= 0:
            sigma2 = np.finfo(float).tiny
        return ArimaModel(
            order, np.zeros(0), np.zeros(0), c, sigma2, resid, tail.copy(),
            _css_loglik(css, n_eff), css, n_eff, True, 0,
        )

    obj = _CssObjective(w, p, q)
    k = 1 + p + q
    max_iter = max_iter or 400 * k
    rng = np.random.default_rng(seed)
    base = _initial_guess(w, p, q)
    starts = [base]
    for _ in range(N_STARTS - 1):
        x0 = base + rng.normal(0.0, _START_SCALE, k)
        shrink = 0
        while not obj.feasible(x0) and shrink < 30:
            x0 = base + 0.5 * (x0 - base)
            shrink += 1
        starts.append(x0)

    best = None
    for x0 in starts:
        res = _nelder_mead(obj, x0, max_iter)
        res2 = _nelder_mead(obj, res.x, max_iter)
        if res2.fun <= res.fun:
            res = res2
        if best is None or res.fun < best.fun:
            best = res
    if not math.isfinite(best.fun):
        raise ArimaError("no feasible parameters found")

    c, phi, theta = obj.unpack(best.x)
    resid = obj.residuals(best.x)
    css = float(resid @ resid)
    n_eff = len(resid)
    sigma2 = css / n_eff
    if sigma2 <= 0:
        sigma2 = np.finfo(float).tiny
    return ArimaModel(
        order, phi.copy(), theta.copy(), c, sigma2, resid, tail.copy(),
        _css_loglik(css, n_eff), css, n_eff, bool(best.success), obj.evaluations,
    )


def _css_loglik(css: float, n: int) -> float:
    if css <= 0:
        return math.inf
    return -0.5 * n * (math.log(2.0 * math.pi * css / n) + 1.0)


# --- forecasting -----------------------------------------------------------


def forecast(model: ArimaModel, horizon: int, confidence: float = 0.95, start: MonthKey | None = None) -> Forecast:
    """Point forecasts and normal intervals on the fitted series' own scale."""
    if not isinstance(horizon, (int, np.integer)) or horizon < 1:
        raise ArimaError(f"horizon must be a positive integer, got {horizon!r}")
    if not 0.0 < confidence < 1.0:
        raise ArimaError(f"confidence must be in (0, 1), got {confidence!r}")
    p, d, q = model.order.p, model.order.d, model.order.q
    tail = np.asarray(model.train_tail, dtype=float)

    levels = [tail]
    for _ in range(d):
        levels.append(np.diff(levels[-1]))
    w_hist = list(levels[-1][len(levels[-1]) - p :]) if p else []
    e_hist = list(model.residuals[len(model.residuals) - q :]) if q else []

    w_fc = np.empty(horizon)
    for h in range(horizon):
        val = model.intercept
        for i in range(1, p + 1):
            val += model.phi[i - 1] * w_hist[-i]
        for j in range(1, q + 1):
            val += model.theta[j - 1] * e_hist[-j]
        w_fc[h] = val
        if p:
            w_hist.append(val)
        if q:
            e_hist.append(0.0)

    mean = w_fc
    for k in range(d - 1, -1, -1):
        mean = levels[k][-1] + np.cumsum(mean)

    psi = psi_weights(model.phi, model.theta, d, horizon)
    se = np.sqrt(model.sigma2 * np.cumsum(psi**2))
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    return Forecast(mean, mean - z * se, mean + z * se, int(horizon), confidence, start, model)


def forecast_pipeline(
    monthly: MonthlySeries,
    order: ArimaOrder,
    horizon: int = 137,
    train_fraction: float = 0.8,
    seed: int = 42,
    confidence: float = 0.95,
) -> tuple[Forecast, AnnualSeries]:
    """Log, fit on a chronological prefix, forecast and exponentiate.

    The forecast starts the month after the training prefix ends. Annual
    totals sum the forecast means by calendar year; years covered only in
    part are listed in ``partial_years``.
    """
    if not 0.0 < train_fraction <= 1.0:
        raise ArimaError(f"train_fraction must be in (0, 1], got {train_fraction!r}")
    try:
        logged = log_transform(monthly)
    except EbikecastError as exc:
        raise ArimaError(f"cannot log-transform sales: {exc}") from exc
    n_train = int(math.floor(train_fraction * len(monthly) + 1e-9))
    train = logged.values[:n_train]
    model = fit(train, order, seed=seed)
    start = monthly.start.shift(n_train)
    fc = forecast(model, horizon, confidence, start)
    level = Forecast(np.exp(fc.mean), np.exp(fc.lower), np.exp(fc.upper), fc.horizon, confidence, start, model)
    annual = annual_totals(MonthlySeries(start, level.mean))
    return level, annual
