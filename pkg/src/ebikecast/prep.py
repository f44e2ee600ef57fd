"""Annual U.S. sales reconstruction and trend-proportional monthly split."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PrepError
from .ingest import AnnualSeries, MonthKey, MonthlySeries, TrendTable

DEFAULT_REF_YEAR = 2019


def us_from_european(eu_year_sales: float, eu_ref_sales: float, us_ref_sales: float) -> float:
    """Scale the U.S. reference-year sales by the European year/reference ratio."""
    values = (eu_year_sales, eu_ref_sales, us_ref_sales)
    if not all(math.isfinite(v) for v in values):
        raise PrepError("inputs must be finite")
    if eu_ref_sales <= 0:
        raise PrepError(f"European reference sales must be positive, got {eu_ref_sales}")
    if eu_year_sales < 0 or us_ref_sales < 0:
        raise PrepError("sales must be non-negative")
    return us_ref_sales * (eu_year_sales / eu_ref_sales)


@dataclass(frozen=True)
class MergeInputs:
    european_annual: AnnualSeries
    european_ref: float
    us_ref: float
    ref_year: int = DEFAULT_REF_YEAR

    def __post_init__(self) -> None:
        if not self.european_ref > 0:
            raise PrepError("European reference sales must be positive")
        if self.us_ref < 0:
            raise PrepError("U.S. reference sales must be non-negative")

    @classmethod
    def from_sources(
        cls, european: AnnualSeries, known_us: AnnualSeries, ref_year: int = DEFAULT_REF_YEAR
    ) -> "MergeInputs":
        """Look up both reference values for ``ref_year`` in the source series."""
        if ref_year not in european:
            raise PrepError(f"reference year {ref_year} missing from European data")
        if ref_year not in known_us:
            raise PrepError(f"reference year {ref_year} missing from U.S. data")
        return cls(european, european[ref_year], known_us[ref_year], ref_year)


def merge_series(inputs: MergeInputs, known_us: AnnualSeries) -> AnnualSeries:
    """Fill years without U.S. data from the European proxy.

    Covers every year from the earliest to the latest year in either source.
    Known U.S. values always pass through unchanged.
    """
    known = known_us.as_dict()
    eu = inputs.european_annual.as_dict()
    all_years = set(known) | set(eu)
    if not all_years:
        raise PrepError("no input years")
    out: dict[int, float] = {}
    for year in range(min(all_years), max(all_years) + 1):
        if year in known:
            out[year] = known[year]
        elif year in eu:
            out[year] = us_from_european(eu[year], inputs.european_ref, inputs.us_ref)
        else:
            raise PrepError(f"year {year} missing from both U.S. and European data")
    return AnnualSeries.from_mapping(out)


def disaggregate(annual: AnnualSeries, trends: TrendTable) -> MonthlySeries:
    """Split each annual total across months in proportion to search frequency."""
    years = annual.years
    if any(b - a != 1 for a, b in zip(years, years[1:])):
        raise PrepError("annual series must cover contiguous years")
    values = []
    for year, total in zip(years, annual.values):
        if year not in trends:
            raise PrepError(f"no trend data for {year}")
        freq = trends.year(year).astype(float)
        denom = freq.sum()
        if denom == 0:
            raise PrepError(f"all trend frequencies are zero in {year}; proportion undefined")
        values.append(total * freq / denom)
    return MonthlySeries(MonthKey(years[0], 1), np.concatenate(values))


def annual_totals(monthly: MonthlySeries) -> AnnualSeries:
    """Calendar-year sums; years with fewer than 12 months are listed as partial."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for key, value in monthly:
        sums[key.year] = sums.get(key.year, 0.0) + value
        counts[key.year] = counts.get(key.year, 0) + 1
    years = sorted(sums)
    partial = tuple(y for y in years if counts[y] < 12)
    return AnnualSeries(tuple(years), [sums[y] for y in years], partial)
