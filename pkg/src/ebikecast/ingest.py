"""Typed containers for the pipeline's series and strict CSV readers/writers.

Four CSV schemas are understood::

    Month,Sales          monthly sales (YYYY-MM keys)
    Year,Sales           annual sales
    Month,Frequency      monthly search-trend frequency (integer 0-100)
    Year,f1,f2,f3,f4,Sales   annual factor table

Headers are matched case-insensitively. Input may use LF or CRLF line
endings; output always uses LF and the shortest round-trip decimal form.
"""
from __future__ import annotations

import csv
import io
import math
import os
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import IngestError

__all__ = [
    "MonthKey",
    "MonthlySeries",
    "AnnualSeries",
    "TrendTable",
    "FactorTable",
    "read_trends",
    "read_annual",
    "read_monthly",
    "read_factors",
    "write_monthly",
    "write_annual",
    "write_csv",
    "format_number",
]

_MONTH_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})\s*$")


@dataclass(frozen=True, order=True)
class MonthKey:
    """A calendar month, ordered lexicographically by (year, month)."""

    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise IngestError(f"invalid month {self.month} in {self.year}-{self.month}")

    @classmethod
    def parse(cls, text: str) -> "MonthKey":
        m = _MONTH_RE.match(text)
        if m is None:
            raise IngestError(f"invalid month key {text!r}; expected YYYY-MM")
        year, month = int(m.group(1)), int(m.group(2))
        if not 1 <= month <= 12:
            raise IngestError(f"invalid month in key {text!r}")
        return cls(year, month)

    def index(self) -> int:
        """Months since year 0; consecutive months differ by exactly 1."""
        return self.year * 12 + (self.month - 1)

    @classmethod
    def from_index(cls, idx: int) -> "MonthKey":
        return cls(idx // 12, idx % 12 + 1)

    def shift(self, n: int) -> "MonthKey":
        return MonthKey.from_index(self.index() + n)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def _frozen_array(values: Iterable[float], dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MonthlySeries:
    """Contiguous monthly series starting at ``start``.

    Contiguity is structural: the i-th value belongs to ``start.shift(i)``.
    """

    start: MonthKey
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.values)
        if arr.ndim != 1:
            raise IngestError("monthly series values must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise IngestError("monthly series contains non-finite values")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_items(cls, items: Iterable[tuple[MonthKey, float]]) -> "MonthlySeries":
        """Build from unordered (key, value) pairs, rejecting duplicates and gaps."""
        pairs = sorted(items, key=lambda kv: kv[0])
        if not pairs:
            raise IngestError("monthly series is empty")
        for (a, _), (b, _) in zip(pairs, pairs[1:]):
            if a == b:
                raise IngestError(f"duplicate month {a}")
            if b.index() - a.index() != 1:
                raise IngestError(f"gap in monthly series between {a} and {b}")
        return cls(pairs[0][0], [v for _, v in pairs])

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[tuple[MonthKey, float]]:
        for i, v in enumerate(self.values):
            yield self.start.shift(i), float(v)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MonthlySeries):
            return NotImplemented
        return self.start == other.start and np.array_equal(self.values, other.values)

    @property
    def keys(self) -> list[MonthKey]:
        return [self.start.shift(i) for i in range(len(self.values))]

    @property
    def end(self) -> MonthKey:
        return self.start.shift(len(self.values) - 1)

    def with_values(self, values: Sequence[float]) -> "MonthlySeries":
        return MonthlySeries(self.start, values)

    def tail_from(self, offset: int) -> "MonthlySeries":
        """Drop the first ``offset`` months."""
        return MonthlySeries(self.start.shift(offset), self.values[offset:])

    def get(self, key: MonthKey) -> float:
        i = key.index() - self.start.index()
        if not 0 <= i < len(self.values):
            raise KeyError(str(key))
        return float(self.values[i])


@dataclass(frozen=True, eq=False)
class AnnualSeries:
    """Year-indexed totals. ``partial_years`` marks years built from fewer than 12 months."""

    years: tuple[int, ...]
    values: np.ndarray
    partial_years: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        years = tuple(int(y) for y in self.years)
        arr = _frozen_array(self.values)
        if len(years) != len(arr):
            raise IngestError("annual series years and values differ in length")
        if any(b <= a for a, b in zip(years, years[1:])):
            raise IngestError("annual series years must be strictly increasing")
        if not np.all(np.isfinite(arr)):
            raise IngestError("annual series contains non-finite values")
        if np.any(arr < 0):
            raise IngestError("negative sales in annual series")
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "partial_years", tuple(self.partial_years))

    @classmethod
    def from_mapping(cls, mapping: dict[int, float]) -> "AnnualSeries":
        years = sorted(mapping)
        return cls(tuple(years), [mapping[y] for y in years])

    def as_dict(self) -> dict[int, float]:
        return {y: float(v) for y, v in zip(self.years, self.values)}

    def __len__(self) -> int:
        return len(self.years)

    def __contains__(self, year: object) -> bool:
        return year in self.years

    def __getitem__(self, year: int) -> float:
        try:
            return float(self.values[self.years.index(year)])
        except ValueError:
            raise KeyError(year) from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AnnualSeries):
            return NotImplemented
        return (
            self.years == other.years
            and np.array_equal(self.values, other.values)
            and self.partial_years == other.partial_years
        )


@dataclass(frozen=True, eq=False)
class TrendTable:
    """Monthly relative search frequencies, complete calendar years only."""

    years: tuple[int, ...]
    frequencies: np.ndarray  # shape (n_years, 12), integer

    def __post_init__(self) -> None:
        freq = np.array(self.frequencies, dtype=np.int64)
        if freq.ndim != 2 or freq.shape[1] != 12 or freq.shape[0] != len(self.years):
            raise IngestError("trend table must have 12 months for every year")
        if np.any(freq < 0) or np.any(freq > 100):
            raise IngestError("frequency out of range [0, 100]")
        freq.setflags(write=False)
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        object.__setattr__(self, "frequencies", freq)

    def __len__(self) -> int:
        return self.frequencies.size

    def year(self, year: int) -> np.ndarray:
        try:
            return self.frequencies[self.years.index(year)]
        except ValueError:
            raise KeyError(year) from None

    def __contains__(self, year: object) -> bool:
        return year in self.years

    def as_monthly(self) -> MonthlySeries:
        if any(b - a != 1 for a, b in zip(self.years, self.years[1:])):
            raise IngestError("trend table years are not contiguous")
        return MonthlySeries(MonthKey(self.years[0], 1), self.frequencies.ravel())


@dataclass(frozen=True, eq=False)
class FactorTable:
    """Per-year explanatory features plus the annual sales target."""

    years: np.ndarray
    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        years = np.array(self.years, dtype=np.int64)
        x = np.array(self.features, dtype=float)
        y = np.array(self.target, dtype=float)
        if x.ndim != 2:
            raise IngestError("features must be a 2-D matrix")
        if not (len(years) == x.shape[0] == len(y)):
            raise IngestError("factor table row counts are inconsistent")
        if len(self.feature_names) != x.shape[1]:
            raise IngestError("feature_names length does not match feature columns")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise IngestError("factor table contains missing or non-finite cells")
        for name, arr in (("years", years), ("features", x), ("target", y)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return len(self.years)

    def take(self, rows: Sequence[int]) -> "FactorTable":
        idx = np.asarray(rows, dtype=np.int64)
        return FactorTable(self.years[idx], self.features[idx], self.target[idx], self.feature_names)

    def row(self, year: int) -> tuple[float, ...]:
        (hits,) = np.nonzero(self.years == year)
        if len(hits) == 0:
            raise KeyError(year)
        return tuple(float(v) for v in self.features[hits[0]])


# --- reading ---------------------------------------------------------------


def _read_rows(path: str | os.PathLike, expected: Sequence[str] | None, ncols: int | None = None):
    """Return (header, data rows) with blank lines dropped and header checked."""
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except FileNotFoundError:
        raise
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise IngestError(f"{path}: missing header row")
    header = [c.strip() for c in rows[0]]
    if expected is not None:
        if [h.lower() for h in header] != [e.lower() for e in expected]:
            raise IngestError(f"{path}: expected header {','.join(expected)!r}, got {','.join(header)!r}")
    width = len(header) if ncols is None else ncols
    if ncols is not None and len(header) != ncols:
        raise IngestError(f"{path}: expected {ncols} columns, got {len(header)} (missing column?)")
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise IngestError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        body.append((lineno, [c.strip() for c in row]))
    return header, body


def _parse_float(text: str, where: str) -> float:
    if text == "":
        raise IngestError(f"{where}: empty cell")
    try:
        value = float(text)
    except ValueError:
        raise IngestError(f"{where}: non-numeric cell {text!r}") from None
    if not math.isfinite(value):
        raise IngestError(f"{where}: non-finite value {text!r}")
    return value


def _parse_year(text: str, where: str) -> int:
    if not re.fullmatch(r"\d{4}", text):
        raise IngestError(f"{where}: invalid year {text!r}")
    return int(text)


def read_trends(path: str | os.PathLike) -> TrendTable:
    """Read a ``Month,Frequency`` file of integer search frequencies."""
    _, body = _read_rows(path, ("Month", "Frequency"))
    by_key: dict[MonthKey, int] = {}
    for lineno, (key_text, freq_text) in body:
        where = f"{path}:{lineno}"
        key = MonthKey.parse(key_text)
        try:
            freq = int(freq_text)
        except ValueError:
            raise IngestError(f"{where}: frequency {freq_text!r} is not an integer") from None
        if not 0 <= freq <= 100:
            raise IngestError(f"{where}: frequency out of range: {freq}")
        if key in by_key:
            raise IngestError(f"{where}: duplicate month {key}")
        by_key[key] = freq
    if not by_key:
        raise IngestError(f"{path}: no data rows")
    years = sorted({k.year for k in by_key})
    table = []
    for y in years:
        months = [by_key.get(MonthKey(y, m)) for m in range(1, 13)]
        if any(v is None for v in months):
            have = sum(v is not None for v in months)
            raise IngestError(f"{path}: year {y} has {have} months; complete years required")
        table.append(months)
    return TrendTable(tuple(years), table)


def read_annual(path: str | os.PathLike) -> AnnualSeries:
    """Read a ``Year,Sales`` file."""
    _, body = _read_rows(path, ("Year", "Sales"))
    values: dict[int, float] = {}
    for lineno, (year_text, sales_text) in body:
        where = f"{path}:{lineno}"
        year = _parse_year(year_text, where)
        sales = _parse_float(sales_text, where)
        if sales < 0:
            raise IngestError(f"{where}: negative sales {sales}")
        if year in values:
            raise IngestError(f"{where}: duplicate year {year}")
        values[year] = sales
    if not values:
        raise IngestError(f"{path}: no data rows")
    return AnnualSeries.from_mapping(values)


def read_monthly(path: str | os.PathLike) -> MonthlySeries:
    """Read a ``Month,Sales`` file; rows may be unsorted but must not leave gaps."""
    _, body = _read_rows(path, ("Month", "Sales"))
    items = []
    for lineno, (key_text, value_text) in body:
        where = f"{path}:{lineno}"
        items.append((MonthKey.parse(key_text), _parse_float(value_text, where)))
    if not items:
        raise IngestError(f"{path}: no data rows")
    return MonthlySeries.from_items(items)


def read_factors(path: str | os.PathLike) -> FactorTable:
    """Read ``Year,<4 features>,Sales``; feature column names are kept verbatim."""
    header, body = _read_rows(path, None, ncols=6)
    if header[0].lower() != "year" or header[-1].lower() != "sales":
        raise IngestError(f"{path}: factor header must start with Year and end with Sales")
    if any(h == "" for h in header):
        raise IngestError(f"{path}: empty column name in header")
    years, feats, target = [], [], []
    seen = set()
    for lineno, row in body:
        where = f"{path}:{lineno}"
        year = _parse_year(row[0], where)
        if year in seen:
            raise IngestError(f"{where}: duplicate year {year}")
        seen.add(year)
        years.append(year)
        feats.append([_parse_float(c, f"{where} column {header[i + 1]!r}") for i, c in enumerate(row[1:5])])
        target.append(_parse_float(row[5], where))
    if not years:
        raise IngestError(f"{path}: no data rows")
    order = np.argsort(years, kind="stable")
    return FactorTable(
        np.asarray(years)[order],
        np.asarray(feats, dtype=float)[order],
        np.asarray(target, dtype=float)[order],
        tuple(header[1:5]),
    )


# --- writing ---------------------------------------------------------------


def format_number(value: float) -> str:
    """Shortest decimal string that parses back to the same float."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    """Write LF-separated CSV (no trailing newline); floats use :func:`format_number`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(c) if isinstance(c, (float, np.floating)) else c for c in row])
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue()[:-1])
    except OSError as exc:
        raise IngestError(f"cannot write {path}: {exc}") from exc


def write_monthly(series: MonthlySeries, path: str | os.PathLike) -> None:
    if len(series) == 0:
        raise IngestError("refusing to write an empty monthly series")
    write_csv(path, ("Month", "Sales"), ((str(k), float(v)) for k, v in series))


def write_annual(series: AnnualSeries, path: str | os.PathLike) -> None:
    if len(series) == 0:
        raise IngestError("refusing to write an empty annual series")
    write_csv(path, ("Year", "Sales"), ((y, float(v)) for y, v in zip(series.years, series.values)))
