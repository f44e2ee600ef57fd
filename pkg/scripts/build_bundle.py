"""Regenerate the CSV files shipped in src/ebikecast/data/.

Run from the repository root:  python scripts/build_bundle.py

* factors: the annual factor table (environmental concern, gas price,
  disposable income, annual mean search popularity), 2006-2022, with the
  reconstructed annual U.S. sales appended as the target column.
* European annual e-bike sales (thousands), 2006-2019, and known U.S. annual
  sales (thousands), 2018-2022, from public industry summaries.
* Monthly search trends: the raw monthly series is not published alongside
  the factor table, only its annual means. Each year's months are filled with
  integers that follow a fixed spring/summer seasonal profile and sum to
  exactly 12 x the annual mean, so the annual column is reproduced exactly.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from ebikecast.ingest import AnnualSeries, write_annual, write_csv  # noqa: E402
from ebikecast.prep import MergeInputs, merge_series  # noqa: E402

OUT = ROOT / "src" / "ebikecast" / "data"

FACTOR_NAMES = (
    "Environmental Concern",
    "Gas Prices in the US (USD)",
    "Disposable Personal Income",
    "Google Trends Relative Values Annually",
)
FACTORS = {
    2006: (0.77, 2.57, 37570, 11.583333),
    2007: (0.76, 2.8, 38093, 13.25),
    2008: (0.74, 3.25, 38188, 19.083333),
    2009: (0.71, 2.35, 37814, 13.666667),
    2010: (0.68, 2.78, 38282, 12.583333),
    2011: (0.68, 3.52, 38769, 12.5),
    2012: (0.73, 3.62, 39732, 12),
    2013: (0.69, 3.51, 38947, 11.75),
    2014: (0.66, 3.36, 40118, 12.833333),
    2015: (0.68, 2.43, 41383, 14.083333),
    2016: (0.73, 2.14, 41821, 16.583333),
    2017: (0.77, 2.42, 42699, 20),
    2018: (0.72, 2.72, 43886, 25.416667),
    2019: (0.74, 2.6, 44644, 30.25),
    2020: (0.69, 2.17, 47241, 47.333333),
    2021: (0.75, 3.01, 48219, 59.416667),
    2022: (0.71, 3.95, 45405, 69.916667),
}

EUROPEAN = {
    2006: 98, 2007: 173, 2008: 279, 2009: 422, 2010: 588, 2011: 716, 2012: 854,
    2013: 907, 2014: 1139, 2015: 1356, 2016: 1667, 2017: 2011, 2018: 2777, 2019: 3397,
}
KNOWN_US = {2018: 369, 2019: 423, 2020: 790, 2021: 880, 2022: 1100}

# relative search weight Jan..Dec
SEASONAL = np.array([0.72, 0.74, 0.92, 1.06, 1.20, 1.22, 1.18, 1.08, 0.98, 0.88, 0.92, 1.10])


def monthly_trends(annual_mean: float) -> list[int]:
    total = int(round(annual_mean * 12))
    raw = SEASONAL / SEASONAL.sum() * total
    base = np.floor(raw).astype(int)
    short = total - base.sum()
    # largest remainder, earliest month first on ties
    order = sorted(range(12), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    assert base.sum() == total and base.max() <= 100
    return base.tolist()


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    european = AnnualSeries.from_mapping({y: float(v) for y, v in EUROPEAN.items()})
    known = AnnualSeries.from_mapping({y: float(v) for y, v in KNOWN_US.items()})
    write_annual(european, OUT / "EuropeanEbikeSales.csv")
    write_annual(known, OUT / "KnownUSEbikeSales.csv")

    rows = []
    for year, (*_, popularity) in FACTORS.items():
        for month, freq in enumerate(monthly_trends(popularity), start=1):
            rows.append((f"{year}-{month:02d}", freq))
    write_csv(OUT / "ElectricBikesGoogleSearchTrends.csv", ("Month", "Frequency"), rows)

    merged = merge_series(MergeInputs.from_sources(european, known, 2019), known)
    write_csv(
        OUT / "factors_annual.csv",
        ("Year", *FACTOR_NAMES, "Sales"),
        ((y, *(float(v) for v in FACTORS[y]), merged[y]) for y in sorted(FACTORS)),
    )


if __name__ == "__main__":
    main()
