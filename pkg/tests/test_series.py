import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ebikecast.errors import SeriesError
from ebikecast.ingest import MonthKey, MonthlySeries
from ebikecast.series import autocorrelation, difference, log_transform, rolling, undifference

finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestLog:
    def test_ones(self):
        out = log_transform(MonthlySeries(MonthKey(2020, 1), [1.0, 1.0]))
        assert list(out.values) == [0.0, 0.0]
        assert out.start == MonthKey(2020, 1)

    def test_e(self):
        assert log_transform(MonthlySeries(MonthKey(2020, 1), [math.e])).values[0] == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_non_positive(self, bad):
        with pytest.raises(SeriesError):
            log_transform(MonthlySeries(MonthKey(2020, 1), [1.0, bad]))

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, st.integers(1, 30), elements=st.floats(-20, 20)))
    def test_inverts_exp(self, x):
        out = log_transform(MonthlySeries(MonthKey(2000, 1), np.exp(x))).values
        assert np.allclose(out, x, rtol=1e-12, atol=1e-12)


class TestDifference:
    def test_first_order(self):
        d, a = difference([1, 2, 4], 1)
        assert list(d) == [1, 2]
        assert list(a) == [1]

    def test_zero_order(self):
        d, a = difference([3.0, 1.0], 0)
        assert list(d) == [3.0, 1.0]
        assert len(a) == 0

    def test_second_order_by_hand(self):
        # [1,2,4,8] -> [1,2,4] -> [1,2]; first elements at each level: 1, then 1
        d, a = difference([1, 2, 4, 8], 2)
        assert list(d) == [1, 2]
        assert list(a) == [1, 1]

    def test_too_short(self):
        with pytest.raises(SeriesError):
            difference([1.0, 2.0], 2)

    def test_anchor_mismatch(self):
        with pytest.raises(SeriesError, match="anchor"):
            undifference([1.0, 2.0], [1.0], order=2)

    def test_random_round_trip(self):
        s = np.random.default_rng(3).standard_normal(50).cumsum()
        d, a = difference(s, 1)
        assert np.allclose(undifference(d, a), s, rtol=0, atol=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(order=st.integers(0, 2), data=st.data())
    def test_round_trip_property(self, order, data):
        s = data.draw(arrays(float, st.integers(order + 1, 40), elements=finite))
        d, a = difference(s, order)
        assert len(d) == len(s) - order
        assert np.allclose(undifference(d, a, order), s, rtol=1e-9, atol=1e-6)


class TestRolling:
    def test_mean(self):
        assert list(rolling([1, 2, 3, 4], 2, "mean")) == [1.5, 2.5, 3.5]

    def test_std_constant(self):
        assert list(rolling([5, 5, 5], 3, "std")) == [0.0]

    def test_sum(self):
        assert list(rolling([1, 2, 3, 4], 2, "sum")) == [3, 5, 7]

    def test_std_is_sample_std(self):
        x = np.random.default_rng(0).standard_normal(20)
        expected = [np.std(x[i : i + 5], ddof=1) for i in range(16)]
        assert np.allclose(rolling(x, 5, "std"), expected, rtol=1e-12)

    @pytest.mark.parametrize("window", [0, 5])
    def test_window_out_of_range(self, window):
        with pytest.raises(SeriesError):
            rolling([1.0, 2.0, 3.0, 4.0], window, "mean")

    def test_unknown_stat(self):
        with pytest.raises(SeriesError):
            rolling([1.0, 2.0], 1, "median")

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, st.integers(1, 40), elements=finite))
    def test_window_one_mean_is_identity(self, x):
        assert np.array_equal(rolling(x, 1, "mean"), x)


class TestAutocorrelation:
    def test_alternating(self):
        x = np.array([1.0, -1.0] * 50)
        assert autocorrelation(x, 1)[0] == pytest.approx(-1.0, abs=0.05)

    def test_white_noise(self):
        x = np.random.default_rng(11).standard_normal(1000)
        assert abs(autocorrelation(x, 1)[0]) < 0.1

    def test_constant(self):
        with pytest.raises(SeriesError):
            autocorrelation([2.0] * 10, 3)

    def test_matches_direct_formula(self):
        x = np.random.default_rng(5).standard_normal(30)
        m = x.mean()
        den = sum((v - m) ** 2 for v in x)
        direct = [sum((x[t] - m) * (x[t + j] - m) for t in range(30 - j)) / den for j in range(1, 6)]
        assert np.allclose(autocorrelation(x, 5), direct, rtol=1e-12)

    @pytest.mark.parametrize("lag", [0, 10])
    def test_lag_out_of_range(self, lag):
        with pytest.raises(SeriesError):
            autocorrelation(np.arange(10.0), lag)

    @settings(max_examples=60, deadline=None)
    @given(arrays(float, st.integers(3, 50), elements=finite).filter(lambda a: np.ptp(a) > 1e-3))
    def test_bounded(self, x):
        r = autocorrelation(x, len(x) - 1)
        assert np.all(np.abs(r) <= 1 + 1e-9)
