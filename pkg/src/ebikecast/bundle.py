"""Paths to the CSV files shipped with the package."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

EUROPEAN = "EuropeanEbikeSales.csv"
KNOWN_US = "KnownUSEbikeSales.csv"
TRENDS = "ElectricBikesGoogleSearchTrends.csv"
FACTORS = "factors_annual.csv"


def path(name: str) -> Path:
    return Path(str(resources.files("ebikecast") / "data" / name))
