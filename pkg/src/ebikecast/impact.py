"""Monte Carlo CO2-savings and calorie-burn estimates for the active e-bike fleet.

Units: sales are thousands of bikes per month, so the fleet is in thousands
of bikes and the monthly formulas

    co2  = (car_g_per_mile - bike_g_per_mile) * fleet * miles / 1000
    kcal = cal_per_mile * fleet * miles / 1000

come out in *thousands* of kg and *thousands* of kcal. Results keep that
scale; ``SimResult.to_plain`` (= 1000) converts to plain kg / kcal for
reporting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, NamedTuple

import numpy as np

from .errors import ImpactError, SeriesError
from .ingest import MonthlySeries
from .series import rolling

FleetStat = Literal["sum", "mean"]
THOUSANDS = 1000.0


@dataclass(frozen=True)
class NormalParam:
    mean: float
    std: float
    units: str = ""
    lower_clip: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.std)):
            raise ImpactError("distribution parameters must be finite")
        if self.std < 0:
            raise ImpactError(f"standard deviation must be >= 0, got {self.std}")

    def draw(self, rng: np.random.Generator) -> float:
        # one standard-normal draw per call, even when std == 0, so the
        # stream position never depends on parameter values
        value = self.mean + self.std * rng.standard_normal()
        if self.lower_clip is not None and value < self.lower_clip:
            value = self.lower_clip
        return float(value)


def approx_std(minimum: float, maximum: float) -> float:
    """Range-rule standard deviation estimate: (max - min) / 4."""
    if maximum < minimum:
        raise ImpactError(f"maximum {maximum} is below minimum {minimum}")
    return (maximum - minimum) / 4.0


PARAM_FIELDS = {
    "lifespan": "lifespan_months",
    "miles": "miles_per_month",
    "car_emissions": "car_emissions",
    "bike_emissions": "bike_emissions",
    "cals_per_mile": "cals_per_mile",
}


@dataclass(frozen=True)
class SimSpec:
    lifespan_months: NormalParam = NormalParam(48.0, 6.0, "months", 1.0)
    miles_per_month: NormalParam = NormalParam(63.33, 12.02, "miles/month", 0.0)
    car_emissions: NormalParam = NormalParam(431.2, 107.803, "g/mile")
    bike_emissions: NormalParam = NormalParam(9.01, 1.9308, "g/mile")
    cals_per_mile: NormalParam = NormalParam(21.0, 3.04, "cal/mile")
    trials: int = 100
    fleet_stat: FleetStat = "sum"
    seed: int = 42

    def __post_init__(self) -> None:
        for name in PARAM_FIELDS.values():
            if not getattr(self, name).mean > 0:
                raise ImpactError(f"{name} mean must be positive")
        if self.trials < 1:
            raise ImpactError("trials must be >= 1")
        if self.fleet_stat not in ("sum", "mean"):
            raise ImpactError(f"fleet_stat must be 'sum' or 'mean', got {self.fleet_stat!r}")

    def with_param(self, name: str, mean: float, std: float) -> "SimSpec":
        """Override one distribution by its short name (see ``PARAM_FIELDS``)."""
        try:
            attr = PARAM_FIELDS[name]
        except KeyError:
            raise ImpactError(f"unknown parameter {name!r}; choose from {sorted(PARAM_FIELDS)}") from None
        old = getattr(self, attr)
        return replace(self, **{attr: NormalParam(mean, std, old.units, old.lower_clip)})

    def zero_variance(self) -> "SimSpec":
        return replace(
            self,
            **{a: replace(getattr(self, a), std=0.0) for a in PARAM_FIELDS.values()},
        )


class YearSummary(NamedTuple):
    mean: float
    std: float
    single_trial: bool


@dataclass(frozen=True, eq=False)
class SimResult:
    metric: str
    unit: str
    trials: tuple[MonthlySeries, ...]
    parameters: tuple[dict[str, float], ...]
    negative: tuple[bool, ...]
    to_plain: float = THOUSANDS
    annual: tuple[dict[int, float], ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if not self.annual:
            object.__setattr__(self, "annual", tuple(_year_end_sums(t) for t in self.trials))

    @property
    def n_trials(self) -> int:
        return len(self.trials)

    def common_years(self) -> list[int]:
        years = set(self.annual[0])
        for a in self.annual[1:]:
            years &= set(a)
        return sorted(years)

    def summary_table(self) -> list[tuple[int, YearSummary]]:
        return [(y, summarize(self, y)) for y in self.common_years()]


def _year_end_sums(series: MonthlySeries) -> dict[int, float]:
    """Trailing 12-month sum at each December with a full year of history."""
    out = {}
    if len(series) < 12:
        return out
    sums = rolling(series.values, 12, "sum")
    first_end = series.start.shift(11)
    for i, value in enumerate(sums):
        key = first_end.shift(i)
        if key.month == 12:
            out[key.year] = float(value)
    return out


def active_fleet(sales: MonthlySeries, lifespan_months: int, stat: FleetStat = "sum") -> MonthlySeries:
    """Bikes in service: trailing-window sum (or mean) of sales over the lifespan.

    The first ``lifespan_months - 1`` months have no full window and are dropped.
    """
    if lifespan_months < 1:
        raise ImpactError("lifespan must be at least one month")
    if lifespan_months > len(sales):
        raise ImpactError(f"lifespan {lifespan_months} exceeds series length {len(sales)}")
    if stat not in ("sum", "mean"):
        raise ImpactError(f"unknown fleet statistic {stat!r}")
    try:
        values = rolling(sales.values, lifespan_months, stat)
    except SeriesError as exc:
        raise ImpactError(str(exc)) from exc
    return MonthlySeries(sales.start.shift(lifespan_months - 1), values)


def _lifespan(spec: SimSpec, rng: np.random.Generator) -> int:
    return max(1, int(math.floor(spec.lifespan_months.draw(rng) + 0.5)))


def _run(sales: MonthlySeries, spec: SimSpec, metric: str) -> SimResult:
    trials, params, negative = [], [], []
    for i in range(spec.trials):
        rng = np.random.default_rng([spec.seed, i])
        life = _lifespan(spec, rng)
        miles = spec.miles_per_month.draw(rng)
        if metric == "co2_saved":
            car = spec.car_emissions.draw(rng)
            bike = spec.bike_emissions.draw(rng)
            per_mile = car - bike
            p = {"lifespan_months": life, "miles_per_month": miles, "car_emissions": car, "bike_emissions": bike}
        else:
            per_mile = spec.cals_per_mile.draw(rng)
            p = {"lifespan_months": life, "miles_per_month": miles, "cals_per_mile": per_mile}
        fleet = active_fleet(sales, life, spec.fleet_stat)
        trials.append(fleet.with_values(per_mile * fleet.values * miles / THOUSANDS))
        params.append(p)
        negative.append(per_mile < 0)
    unit = "thousand kg CO2 / month" if metric == "co2_saved" else "thousand kcal / month"
    return SimResult(metric, unit, tuple(trials), tuple(params), tuple(negative))


def run_co2(sales: MonthlySeries, spec: SimSpec) -> SimResult:
    """Monthly CO2 saved per trial; parameters are drawn once per trial.

    Trials where the sampled car emission rate falls below the bike rate give
    negative savings and are marked in ``SimResult.negative``.
    """
    return _run(sales, spec, "co2_saved")


def run_calories(sales: MonthlySeries, spec: SimSpec) -> SimResult:
    """Monthly kilocalories burned per trial."""
    return _run(sales, spec, "kcal_burned")


def summarize(result: SimResult, year: int) -> YearSummary:
    """Cross-trial mean and sample std of one year's trailing-12-month total.

    With a single trial the std is reported as 0 and ``single_trial`` is set.
    """
    values = []
    for i, annual in enumerate(result.annual):
        if year not in annual:
            raise ImpactError(f"year {year} not fully covered by trial {i}")
        values.append(annual[year])
    arr = np.asarray(values)
    if len(arr) == 1:
        return YearSummary(float(arr[0]), 0.0, True)
    return YearSummary(float(arr.mean()), float(arr.std(ddof=1)), False)


def per_mile_products(result: SimResult) -> np.ndarray:
    """Per-trial (per-mile factor * miles), the quantity the monthly formula scales by fleet."""
    if result.metric == "co2_saved":
        return np.array([(p["car_emissions"] - p["bike_emissions"]) * p["miles_per_month"] for p in result.parameters])
    return np.array([p["cals_per_mile"] * p["miles_per_month"] for p in result.parameters])
