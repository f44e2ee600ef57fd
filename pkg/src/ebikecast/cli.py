"""Command-line pipeline: prep, diagnose, fit, forecast, importance, simulate, run.

stdout carries result tables; stderr carries diagnostics. Each module's
error class maps to its own exit code (see ``errors.py``); a missing input
file exits with ``EXIT_MISSING_INPUT``.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bundle
from .arima import ArimaOrder, fit, forecast_pipeline
from .diagnostics import adf_test, kurtosis, ljung_box
from .errors import EbikecastError
from .forest import evaluate, fit_forest, split_data
from .impact import SimSpec, run_calories, run_co2, summarize
from .ingest import (
    MonthlySeries,
    read_annual,
    read_factors,
    read_monthly,
    read_trends,
    write_annual,
    write_csv,
    write_monthly,
)
from .plotting import decimal_year, emit_plot
from .prep import DEFAULT_REF_YEAR, MergeInputs, disaggregate, merge_series
from .series import difference, log_transform, rolling

EXIT_MISSING_INPUT = 11
SEED_ENV = "EBIKECAST_SEED"

MONTHLY_CSV = "MonthlyUSEbikeSales.csv"
ANNUAL_CSV = "AnnualUSEbikeSales.csv"
FORECAST_CSV = "MonthlyEBikeUSForecast.csv"
FORECAST_ANNUAL_CSV = "AnnualEBikeUSForecast.csv"
IMPORTANCE_CSV = "importances.csv"
TRIALS_CSV = "simulation_trials.csv"
SUMMARY_CSV = "simulation_summary.csv"


@dataclass
class PipelineConfig:
    output: Path = Path("out")
    european: Path = field(default_factory=lambda: bundle.path(bundle.EUROPEAN))
    known_us: Path = field(default_factory=lambda: bundle.path(bundle.KNOWN_US))
    trends: Path = field(default_factory=lambda: bundle.path(bundle.TRENDS))
    factors: Path = field(default_factory=lambda: bundle.path(bundle.FACTORS))
    monthly: Path | None = None
    ref_year: int = DEFAULT_REF_YEAR
    order: ArimaOrder = ArimaOrder(12, 1, 1)
    horizon: int = 137
    train_fraction: float = 0.8
    confidence: float = 0.95
    seed: int = 42
    lags: int | None = None
    n_trees: int = 1000
    test_fraction: float = 0.3
    split_seed: int = 1
    trials: int = 100
    fleet_stat: str = "sum"
    params: dict[str, tuple[float, float]] = field(default_factory=dict)
    plots: bool = True

    def monthly_path(self) -> Path:
        return self.monthly if self.monthly is not None else self.output / MONTHLY_CSV

    def sim_spec(self) -> SimSpec:
        spec = SimSpec(trials=self.trials, fleet_stat=self.fleet_stat, seed=self.seed)
        for name, (mean, std) in sorted(self.params.items()):
            spec = spec.with_param(name, mean, std)
        return spec


def _out(text: str = "") -> None:
    print(text, file=sys.stdout)


def _log(text: str) -> None:
    print(text, file=sys.stderr)


def _monthly_xy(series: MonthlySeries) -> np.ndarray:
    return np.array([decimal_year(k) for k in series.keys])


def _load_monthly(config: PipelineConfig) -> MonthlySeries:
    return read_monthly(config.monthly_path())


# --- subcommands -----------------------------------------------------------


def cmd_prep(config: PipelineConfig) -> list[Path]:
    european = read_annual(config.european)
    known = read_annual(config.known_us)
    trends = read_trends(config.trends)
    annual = merge_series(MergeInputs.from_sources(european, known, config.ref_year), known)
    monthly = disaggregate(annual, trends)
    config.output.mkdir(parents=True, exist_ok=True)
    written = [config.output / ANNUAL_CSV, config.output / MONTHLY_CSV]
    write_annual(annual, written[0])
    write_monthly(monthly, written[1])
    if config.plots:
        written.append(config.output / "monthly_sales.svg")
        emit_plot(
            [("monthly sales", _monthly_xy(monthly), monthly.values)],
            written[-1], "Reconstructed U.S. e-bike sales", "Year", "Thousands of units / month",
        )
    _out(f"{'Year':<6}{'Sales (thousands)':>20}")
    for year, value in zip(annual.years, annual.values):
        _out(f"{year:<6}{value:>20.3f}")
    return written


def cmd_diagnose(config: PipelineConfig) -> list[Path]:
    monthly = _load_monthly(config)
    logged = log_transform(monthly)
    transformed, _ = difference(logged.values, 1)
    lags = config.lags or 12
    raw_adf = adf_test(monthly.values)
    tr_adf = adf_test(transformed)
    lb = ljung_box(transformed, lags)
    _out(f"{'series':<18}{'ADF stat':>12}{'p-value':>14}{'lags':>6}{'nobs':>6}{'cv 1%':>10}{'cv 5%':>10}{'cv 10%':>10}")
    for name, r in (("raw", raw_adf), ("log-diff", tr_adf)):
        cv = r.critical_values
        _out(
            f"{name:<18}{r.statistic:>12.4f}{r.p_value:>14.6g}{r.lags_used:>6d}{r.n_obs:>6d}"
            f"{cv['1%']:>10.4f}{cv['5%']:>10.4f}{cv['10%']:>10.4f}"
        )
    _out()
    _out(f"{'Ljung-Box (log-diff)':<22}{'Q':>12}{'p-value':>14}{'m':>5}{'dof':>5}")
    _out(f"{'':<22}{lb.q:>12.4f}{lb.p_value:>14.6g}{lb.m:>5d}{lb.dof:>5d}")
    _out()
    _out(f"{'kurtosis':<18}{'raw':>12}{'excess':>12}")
    for name, s in (("raw", monthly.values), ("log-diff", transformed)):
        _out(f"{name:<18}{kurtosis(s):>12.4f}{kurtosis(s, excess=True):>12.4f}")
    written = []
    if config.plots:
        config.output.mkdir(parents=True, exist_ok=True)
        x = _monthly_xy(logged)
        window = 3
        path = config.output / "rolling_stats.svg"
        emit_plot(
            [
                ("log sales", x, logged.values),
                ("rolling mean", x[window - 1 :], rolling(logged.values, window, "mean")),
                ("rolling std", x[window - 1 :], rolling(logged.values, window, "std")),
            ],
            path, "Rolling mean & standard deviation (log sales)", "Year", "log(thousands of units)",
        )
        written.append(path)
    return written


def cmd_fit(config: PipelineConfig) -> list[Path]:
    monthly = _load_monthly(config)
    logged = log_transform(monthly)
    n_train = int(math.floor(config.train_fraction * len(logged) + 1e-9))
    model = fit(logged.values[:n_train], config.order, seed=config.seed)
    o = config.order
    _out(f"ARIMA{o} on log sales, {n_train} training months ({logged.start} .. {logged.start.shift(n_train - 1)})")
    _out(f"{'term':<12}{'coef':>14}")
    _out(f"{'intercept':<12}{model.intercept:>14.6f}")
    for i, v in enumerate(model.phi, start=1):
        _out(f"{f'ar.L{i}':<12}{v:>14.6f}")
    for j, v in enumerate(model.theta, start=1):
        _out(f"{f'ma.L{j}':<12}{v:>14.6f}")
    _out(f"{'sigma2':<12}{model.sigma2:>14.6g}")
    _out(f"{'css':<12}{model.css:>14.6g}")
    _out(f"{'loglik_css':<12}{model.loglik_css:>14.4f}")
    _out(f"{'converged':<12}{str(model.converged):>14}")
    m = config.lags or max(24, model.n_params + 1)
    lb = ljung_box(model.residuals, m, fitted_params=model.n_params)
    _out(f"Ljung-Box on residuals: Q={lb.q:.4f} p-value={lb.p_value:.6g} m={lb.m} dof={lb.dof}")
    _out(f"residual kurtosis: {kurtosis(model.residuals):.4f} (excess {kurtosis(model.residuals, excess=True):.4f})")
    if not model.converged:
        _log("warning: optimizer hit its iteration cap; reporting best parameters found")
    return []


def cmd_forecast(config: PipelineConfig) -> list[Path]:
    monthly = _load_monthly(config)
    fc, annual = forecast_pipeline(
        monthly, config.order, config.horizon, config.train_fraction, config.seed, config.confidence
    )
    config.output.mkdir(parents=True, exist_ok=True)
    months = fc.months()
    written = [config.output / FORECAST_CSV, config.output / FORECAST_ANNUAL_CSV]
    write_csv(
        written[0],
        ("Month", "Mean", "Lower", "Upper"),
        ((str(k), float(m), float(lo), float(hi)) for k, m, lo, hi in zip(months, fc.mean, fc.lower, fc.upper)),
    )
    write_annual(annual, written[1])
    if config.plots:
        x_hist = _monthly_xy(monthly)
        x_fc = np.array([decimal_year(k) for k in months])
        written.append(config.output / "forecast.svg")
        emit_plot(
            [
                ("observed", x_hist, np.log(monthly.values)),
                ("forecast mean", x_fc, np.log(fc.mean)),
                ("lower", x_fc, np.log(fc.lower)),
                ("upper", x_fc, np.log(fc.upper)),
            ],
            written[-1], f"ARIMA{config.order} forecast", "Year", "log(thousands of units)",
        )
        full = [y for y in annual.years if y not in annual.partial_years]
        written.append(config.output / "forecast_annual.svg")
        emit_plot(
            [(str(y), [y], [annual[y]]) for y in full],
            written[-1], "U.S. e-bike sales (forecast)", "Year", "Thousands of units",
        )
    _out(f"{'Year':<6}{'Sales (thousands)':>20}")
    for year, value in zip(annual.years, annual.values):
        mark = "  (partial)" if year in annual.partial_years else ""
        _out(f"{year:<6}{value:>20.3f}{mark}")
    return written


def cmd_importance(config: PipelineConfig) -> list[Path]:
    table = read_factors(config.factors)
    train, test = split_data(table, config.test_fraction, config.split_seed)
    model = fit_forest(train, config.n_trees, config.seed)
    mae, mape, accuracy = evaluate(model, test)
    if model.degenerate:
        _log("warning: constant training target; importances are undefined and reported as zero")
    _out(f"{'Variable':<42}{'Coefficient':>12}")
    ranking = model.ranking()
    for name, value in ranking:
        _out(f"{name:<42}{value:>12.4f}")
    _out()
    _out(f"train rows: {len(train)}  test rows: {len(test)}  trees: {config.n_trees}")
    _out(f"MAE: {mae:.4f} (thousands of units)")
    _out(f"MAPE: {mape:.4f} %")
    _out(f"Accuracy: {accuracy:.4f} %")
    config.output.mkdir(parents=True, exist_ok=True)
    path = config.output / IMPORTANCE_CSV
    write_csv(path, ("Variable", "Importance"), ranking)
    return [path]


def cmd_simulate(config: PipelineConfig) -> list[Path]:
    monthly = _load_monthly(config)
    spec = config.sim_spec()
    co2 = run_co2(monthly, spec)
    cal = run_calories(monthly, spec)
    config.output.mkdir(parents=True, exist_ok=True)
    written = [config.output / TRIALS_CSV, config.output / SUMMARY_CSV]

    def trial_rows():
        for i, (a, b) in enumerate(zip(co2.trials, cal.trials)):
            # both runs draw the lifespan first from the same stream, so the months line up
            for (k, va), (_, vb) in zip(a, b):
                yield i, str(k), va * co2.to_plain, vb * cal.to_plain

    write_csv(written[0], ("Trial", "Month", "CO2kg", "kCal"), trial_rows())
    years = sorted(set(co2.common_years()) & set(cal.common_years()))
    rows = []
    for y in years:
        c, k = summarize(co2, y), summarize(cal, y)
        rows.append((y, c.mean * co2.to_plain, c.std * co2.to_plain, k.mean * cal.to_plain, k.std * cal.to_plain))
    write_csv(written[1], ("Year", "CO2kg_mean", "CO2kg_std", "kCal_mean", "kCal_std"), rows)
    if config.plots:
        for result, name, label in ((co2, "co2_trials.svg", "CO2 saved (kg / month)"), (cal, "kcal_trials.svg", "kcal burned / month")):
            path = config.output / name
            emit_plot(
                [(f"trial {i}", _monthly_xy(t), t.values * result.to_plain) for i, t in enumerate(result.trials)],
                path, f"{label}, {result.n_trials} trials", "Year", label, stroke_width=0.6,
            )
            written.append(path)
    flagged = sum(co2.negative) + sum(cal.negative)
    if flagged:
        _log(f"warning: {flagged} trial(s) produced negative savings/calories")
    _out(f"{'Year':<6}{'CO2kg_mean':>18}{'CO2kg_std':>18}{'kCal_mean':>18}{'kCal_std':>18}")
    for y, cm, cs, km, ks in rows:
        _out(f"{y:<6}{cm:>18.2f}{cs:>18.2f}{km:>18.2f}{ks:>18.2f}")
    if len(rows) and spec.trials == 1:
        _log("note: single trial; std columns are 0 by convention")
    return written


def cmd_run(config: PipelineConfig) -> list[Path]:
    written = []
    config.monthly = config.output / MONTHLY_CSV
    for step in (cmd_prep, cmd_diagnose, cmd_fit, cmd_forecast, cmd_importance, cmd_simulate):
        _out(f"== {step.__name__[4:]}")
        written.extend(step(config))
        _out()
    return written


COMMANDS = {
    "prep": cmd_prep,
    "diagnose": cmd_diagnose,
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "importance": cmd_importance,
    "simulate": cmd_simulate,
    "run": cmd_run,
}


# --- argument parsing ------------------------------------------------------


def _order(text: str) -> ArimaOrder:
    try:
        return ArimaOrder.parse(text)
    except EbikecastError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _param(text: str) -> tuple[str, tuple[float, float]]:
    try:
        name, rest = text.split("=", 1)
        mean, std = (float(v) for v in rest.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--param expects name=mean,std, got {text!r}") from None
    return name.strip(), (mean, std)


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 42
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV} must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebikecast", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help=f"random seed (default ${SEED_ENV} or 42)")
    common.add_argument("--no-plots", action="store_true", help="skip SVG output")

    prep = argparse.ArgumentParser(add_help=False)
    prep.add_argument("--european", type=Path, help="European annual sales CSV (Year,Sales)")
    prep.add_argument("--known-us", type=Path, help="known U.S. annual sales CSV (Year,Sales)")
    prep.add_argument("--trends", type=Path, help="monthly search trends CSV (Month,Frequency)")
    prep.add_argument("--ref-year", type=int, default=DEFAULT_REF_YEAR)

    monthly = argparse.ArgumentParser(add_help=False)
    monthly.add_argument("--input", type=Path, help=f"monthly sales CSV (default <output>/{MONTHLY_CSV})")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--order", type=_order, default=ArimaOrder(12, 1, 1), help="p,d,q (default 12,1,1)")
    model.add_argument("--train-fraction", type=float, default=0.8)
    model.add_argument("--lags", type=int, default=None, help="Ljung-Box lag count")

    fc = argparse.ArgumentParser(add_help=False)
    fc.add_argument("--horizon", type=int, default=137)
    fc.add_argument("--confidence", type=float, default=0.95)

    forest = argparse.ArgumentParser(add_help=False)
    forest.add_argument("--factors", type=Path, help="factor table CSV (default: bundled)")
    forest.add_argument("--trees", type=int, default=1000)
    forest.add_argument("--test-fraction", type=float, default=0.3)
    forest.add_argument("--split-seed", type=int, default=1)

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--trials", type=int, default=100)
    sim.add_argument("--fleet-stat", choices=("sum", "mean"), default="sum")
    sim.add_argument(
        "--param", type=_param, action="append", default=[],
        help="override a distribution: lifespan|miles|car_emissions|bike_emissions|cals_per_mile=mean,std",
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("prep", parents=[common, prep], help="reconstruct annual and monthly U.S. sales")
    sub.add_parser("diagnose", parents=[common, monthly, model], help="ADF, Ljung-Box and kurtosis")
    sub.add_parser("fit", parents=[common, monthly, model], help="fit ARIMA on log sales")
    sub.add_parser("forecast", parents=[common, monthly, model, fc], help="forecast and aggregate to years")
    sub.add_parser("importance", parents=[common, forest], help="random-forest driver importances")
    sub.add_parser("simulate", parents=[common, monthly, sim], help="Monte Carlo CO2 and calorie impact")
    sub.add_parser("run", parents=[common, prep, model, fc, forest, sim], help="full pipeline")
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig(output=args.output, seed=args.seed if args.seed is not None else _default_seed())
    config.plots = not args.no_plots
    for attr, key in (("european", "european"), ("known_us", "known_us"), ("trends", "trends"), ("factors", "factors")):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, attr, value)
    if getattr(args, "input", None) is not None:
        config.monthly = args.input
    for attr in ("ref_year", "order", "train_fraction", "lags", "horizon", "confidence",
                 "test_fraction", "split_seed", "trials", "fleet_stat"):
        if hasattr(args, attr):
            setattr(config, attr, getattr(args, attr))
    if hasattr(args, "trees"):
        config.n_trees = args.trees
    if hasattr(args, "param"):
        config.params = dict(args.param)
    return config


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        COMMANDS[args.command](config)
    except FileNotFoundError as exc:
        _log(f"error: input file not found: {exc.filename or exc}")
        return EXIT_MISSING_INPUT
    except EbikecastError as exc:
        _log(f"error: {exc}")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
