import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebikecast.errors import IngestError
from ebikecast.ingest import (
    MonthKey,
    MonthlySeries,
    read_annual,
    read_factors,
    read_monthly,
    read_trends,
    write_annual,
    write_monthly,
)

FACTOR_HEADER = "Year,Environmental Concern,Gas Prices,Disposable Income,Popularity,Sales\n"


def trend_rows(year, values):
    return "".join(f"{year}-{m:02d},{v}\n" for m, v in enumerate(values, start=1))


class TestMonthKey:
    def test_parse_and_format(self):
        k = MonthKey.parse("2019-03")
        assert (k.year, k.month) == (2019, 3)
        assert str(k) == "2019-03"

    def test_ordering_is_lexicographic(self):
        assert MonthKey(2018, 12) < MonthKey(2019, 1) < MonthKey(2019, 2)

    def test_shift_crosses_years(self):
        assert MonthKey(2019, 11).shift(3) == MonthKey(2020, 2)
        assert MonthKey(2020, 1).shift(-1) == MonthKey(2019, 12)

    @pytest.mark.parametrize("text", ["2019-13", "2019-00", "19-01", "2019/01", ""])
    def test_rejects_bad_keys(self, text):
        with pytest.raises(IngestError):
            MonthKey.parse(text)


class TestReadTrends:
    def test_identity_ingestion(self, write):
        path = write("t.csv", "Month,Frequency\n" + trend_rows(2006, [50] * 12))
        table = read_trends(path)
        assert len(table) == 12
        assert table.years == (2006,)
        assert list(table.year(2006)) == [50] * 12

    def test_unsorted_rows_come_back_sorted(self, write):
        rows = trend_rows(2007, range(1, 13)).splitlines(keepends=True) + trend_rows(2006, [5] * 12).splitlines(
            keepends=True
        )
        path = write("t.csv", "Month,Frequency\n" + "".join(reversed(rows)))
        table = read_trends(path)
        assert table.years == (2006, 2007)
        assert list(table.year(2007)) == list(range(1, 13))

    def test_invalid_month(self, write):
        path = write("t.csv", "Month,Frequency\n2006-13,10\n")
        with pytest.raises(IngestError, match="invalid month"):
            read_trends(path)

    def test_frequency_out_of_range(self, write):
        path = write("t.csv", "Month,Frequency\n" + trend_rows(2006, [101] + [1] * 11))
        with pytest.raises(IngestError, match="frequency out of range"):
            read_trends(path)

    def test_duplicate_month(self, write):
        path = write("t.csv", "Month,Frequency\n" + trend_rows(2006, [1] * 12) + "2006-05,3\n")
        with pytest.raises(IngestError, match="duplicate"):
            read_trends(path)

    def test_incomplete_year(self, write):
        path = write("t.csv", "Month,Frequency\n" + trend_rows(2006, [1] * 11))
        with pytest.raises(IngestError, match="11 months"):
            read_trends(path)

    def test_crlf_and_case_insensitive_header(self, write):
        text = "MONTH,frequency\r\n" + trend_rows(2006, [7] * 12).replace("\n", "\r\n")
        assert list(read_trends(write("t.csv", text)).year(2006)) == [7] * 12

    def test_non_integer_frequency(self, write):
        path = write("t.csv", "Month,Frequency\n" + trend_rows(2006, ["1.5"] + [1] * 11))
        with pytest.raises(IngestError):
            read_trends(path)


class TestReadAnnual:
    def test_single_row(self, write):
        series = read_annual(write("a.csv", "Year,Sales\n2019,423\n"))
        assert series.as_dict() == {2019: 423.0}

    def test_sorted_output(self, write):
        series = read_annual(write("a.csv", "Year,Sales\n2020,5\n2018,3\n2019,4\n"))
        assert series.years == (2018, 2019, 2020)

    def test_duplicate_year(self, write):
        with pytest.raises(IngestError, match="duplicate"):
            read_annual(write("a.csv", "Year,Sales\n2019,1\n2019,2\n"))

    def test_negative_sales(self, write):
        with pytest.raises(IngestError, match="negative sales"):
            read_annual(write("a.csv", "Year,Sales\n2019,-1\n"))

    def test_wrong_header(self, write):
        with pytest.raises(IngestError, match="header"):
            read_annual(write("a.csv", "Yr,Units\n2019,1\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_annual(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path, annual_sales):
        write_annual(annual_sales, tmp_path / "a.csv")
        assert read_annual(tmp_path / "a.csv") == annual_sales


class TestMonthly:
    def test_write_format(self, tmp_path):
        path = tmp_path / "m.csv"
        write_monthly(MonthlySeries(MonthKey(2019, 1), [10.5]), path)
        assert path.read_bytes() == b"Month,Sales\n2019-01,10.5"

    def test_empty_series_rejected(self, tmp_path):
        with pytest.raises(IngestError):
            write_monthly(MonthlySeries(MonthKey(2019, 1), []), tmp_path / "m.csv")

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(IngestError, match="cannot write"):
            write_monthly(MonthlySeries(MonthKey(2019, 1), [1.0]), tmp_path / "missing" / "m.csv")

    def test_random_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        series = MonthlySeries(MonthKey(2010, 5), rng.lognormal(3.0, 2.0, size=100) * rng.choice([1e-6, 1, 1e6], 100))
        write_monthly(series, tmp_path / "m.csv")
        back = read_monthly(tmp_path / "m.csv")
        assert back.keys == series.keys
        assert np.array_equal(back.values, series.values)

    def test_gap_rejected(self, write):
        with pytest.raises(IngestError, match="gap"):
            read_monthly(write("m.csv", "Month,Sales\n2019-01,1\n2019-03,2\n"))

    def test_unsorted_rows_sorted(self, write):
        s = read_monthly(write("m.csv", "Month,Sales\n2019-02,2\n2018-12,0.5\n2019-01,1\n"))
        assert s.start == MonthKey(2018, 12)
        assert list(s.values) == [0.5, 1.0, 2.0]

    def test_non_numeric(self, write):
        with pytest.raises(IngestError, match="non-numeric"):
            read_monthly(write("m.csv", "Month,Sales\n2019-01,abc\n"))

    def test_non_finite(self, write):
        with pytest.raises(IngestError):
            read_monthly(write("m.csv", "Month,Sales\n2019-01,nan\n"))

    @settings(max_examples=60, deadline=None)
    @given(
        values=st.lists(
            st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300), min_size=1, max_size=40
        ),
        year=st.integers(1900, 2100),
        month=st.integers(1, 12),
    )
    def test_round_trip_property(self, tmp_path_factory, values, year, month):
        path = tmp_path_factory.mktemp("rt") / "m.csv"
        series = MonthlySeries(MonthKey(year, month), values)
        write_monthly(series, path)
        assert read_monthly(path) == series


class TestReadFactors:
    def test_table_rows(self, factors):
        assert factors.row(2006) == (0.77, 2.57, 37570.0, 11.583333)
        assert factors.row(2022) == (0.71, 3.95, 45405.0, 69.916667)
        assert len(factors) == 17
        assert list(factors.years) == list(range(2006, 2023))

    def test_empty_cell(self, write):
        with pytest.raises(IngestError, match="empty cell"):
            read_factors(write("f.csv", FACTOR_HEADER + "2006,0.77,,37570,11.5,12\n"))

    def test_missing_column(self, write):
        with pytest.raises(IngestError, match="missing column"):
            read_factors(write("f.csv", "Year,A,B,C,Sales\n2006,1,2,3,4\n"))

    def test_non_numeric(self, write):
        with pytest.raises(IngestError, match="non-numeric"):
            read_factors(write("f.csv", FACTOR_HEADER + "2006,0.77,x,37570,11.5,12\n"))

    def test_sorted_by_year(self, write):
        f = read_factors(write("f.csv", FACTOR_HEADER + "2008,1,1,1,1,3\n2006,1,1,1,1,1\n2007,1,1,1,1,2\n"))
        assert list(f.years) == [2006, 2007, 2008]
        assert list(f.target) == [1.0, 2.0, 3.0]
        assert f.feature_names == ("Environmental Concern", "Gas Prices", "Disposable Income", "Popularity")


def test_factor_table_does_not_freeze_caller_arrays():
    from ebikecast.ingest import FactorTable

    x = np.ones((3, 2))
    y = np.arange(3.0)
    FactorTable(np.arange(3), x, y, ("a", "b"))
    x[0, 0] = 5.0
    y[0] = 5.0
