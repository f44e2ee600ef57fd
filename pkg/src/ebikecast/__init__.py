"""E-bike sales reconstruction, ARIMA forecasting, driver importance and impact simulation."""

from .errors import EbikecastError
from .ingest import AnnualSeries, FactorTable, MonthKey, MonthlySeries, TrendTable

__version__ = "0.1.0"

__all__ = [
    "AnnualSeries",
    "EbikecastError",
    "FactorTable",
    "MonthKey",
    "MonthlySeries",
    "TrendTable",
]
