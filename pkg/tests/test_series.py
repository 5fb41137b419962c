from __future__ import annotations

import datetime as dt
import io

import numpy as np
import pytest

from conftest import make_series
from crudecast.errors import (
    BoundaryOutOfRange,
    CalendarMismatch,
    DuplicateDate,
    EmptyAfterAlignment,
    EmptyIntersection,
    LagExceedsLength,
    LagTooLarge,
    OrderExceedsLength,
)
from crudecast.series import (
    DailySeries,
    RawObservations,
    SignalSet,
    TradingCalendar,
    align_to_calendar,
    concatenate,
    difference,
    inner_join,
    lag,
    split,
)

D = dt.date


class TestTradingCalendar:
    def test_weekends_and_holidays(self, nyse_2015):
        assert not nyse_2015.is_business_day(D(2015, 1, 3))
        assert not nyse_2015.is_business_day(D(2015, 1, 19))
        assert nyse_2015.is_business_day(D(2015, 1, 20))

    def test_weekend_holiday_dropped(self):
        cal = TradingCalendar(holidays=(D(2015, 1, 3), D(2015, 1, 2), D(2015, 1, 2)))
        assert cal.holidays == (D(2015, 1, 2),)

    def test_business_days_closed_interval(self, nyse_2015):
        days = nyse_2015.business_days(D(2015, 1, 16), D(2015, 1, 21))
        assert [str(d) for d in days] == ["2015-01-16", "2015-01-20", "2015-01-21"]

    def test_shift_and_count(self, nyse_2015):
        assert nyse_2015.shift(D(2015, 1, 16), 1) == D(2015, 1, 20)
        assert nyse_2015.shift(D(2015, 1, 20), -1) == D(2015, 1, 16)
        assert nyse_2015.count_between(D(2015, 1, 16), D(2015, 1, 21)) == 2

    def test_custom_weekend(self):
        cal = TradingCalendar(weekend_days=frozenset({4, 5}))
        assert cal.is_business_day(D(2015, 1, 4))  # Sunday
        assert not cal.is_business_day(D(2015, 1, 2))  # Friday

    def test_invalid_weekend(self):
        with pytest.raises(ValueError):
            TradingCalendar(weekend_days=frozenset(range(7)))

    def test_holiday_file(self, tmp_path):
        p = tmp_path / "h.txt"
        p.write_text("# closures\n2015-01-19\n\n2015-02-16\n")
        cal = TradingCalendar.from_holiday_file(p)
        assert cal.holidays == (D(2015, 1, 19), D(2015, 2, 16))


class TestDailySeries:
    def test_dates_skip_weekend(self, cal):
        s = make_series([1, 2, 3], start=D(2015, 1, 8))
        assert s.date_list() == [D(2015, 1, 8), D(2015, 1, 9), D(2015, 1, 12)]
        assert s.end_date == D(2015, 1, 12)

    def test_values_are_read_only(self):
        s = make_series([1, 2])
        with pytest.raises(ValueError):
            s.values[0] = 5

    def test_rejects_weekend_start_and_nan(self, cal):
        with pytest.raises(ValueError):
            DailySeries("x", cal, D(2015, 1, 3), [1.0])
        with pytest.raises(ValueError):
            DailySeries("x", cal, D(2015, 1, 5), [1.0, np.nan])
        with pytest.raises(ValueError):
            DailySeries("x", cal, D(2015, 1, 5), [])

    def test_index_and_value_at(self):
        s = make_series([10, 11, 12, 13, 14, 15])
        assert s.value_at(D(2015, 1, 12)) == 15.0
        with pytest.raises(KeyError):
            s.index_of(D(2015, 1, 10))
        with pytest.raises(KeyError):
            s.index_of(D(2015, 1, 2))

    def test_between(self):
        s = make_series(range(10))
        sub = s.between(D(2015, 1, 7), D(2015, 1, 13))
        assert sub.values.tolist() == [2, 3, 4, 5, 6]
        with pytest.raises(EmptyIntersection):
            s.between(D(2016, 1, 1))

    def test_csv_round_trip(self, cal):
        s = make_series([0.1, 1 / 3, 2e-17], name="wti")
        buf = io.StringIO()
        s.to_csv(buf)
        buf.seek(0)
        back = DailySeries.from_csv(buf, cal, name="wti")
        assert back == s

    def test_from_csv_rejects_gaps(self, cal):
        text = "date,value\n2015-01-05,1\n2015-01-07,2\n"
        with pytest.raises(ValueError):
            DailySeries.from_csv(io.StringIO(text), cal)


class TestAlignment:
    def test_weekend_dropped_and_gap_interpolated(self, cal):
        raw = RawObservations(((D(2015, 1, 2), 10.0), (D(2015, 1, 3), 99.0), (D(2015, 1, 7), 16.0)))
        s = align_to_calendar(raw, cal, "x")
        # Jan 2 (Fri), Jan 5, Jan 6 interpolated over 3 business-day steps, Jan 7
        assert s.start_date == D(2015, 1, 2)
        np.testing.assert_allclose(s.values, [10.0, 12.0, 14.0, 16.0], rtol=0, atol=1e-12)

    def test_holiday_observation_dropped(self, nyse_2015):
        raw = RawObservations(((D(2015, 1, 16), 1.0), (D(2015, 1, 19), 50.0), (D(2015, 1, 20), 3.0)))
        s = align_to_calendar(raw, nyse_2015)
        assert s.values.tolist() == [1.0, 3.0]

    def test_no_extrapolation(self, cal):
        raw = RawObservations(((D(2015, 1, 6), 1.0), (D(2015, 1, 8), 3.0)))
        s = align_to_calendar(raw, cal)
        assert s.start_date == D(2015, 1, 6) and s.end_date == D(2015, 1, 8)

    def test_only_weekend(self, cal):
        with pytest.raises(EmptyAfterAlignment):
            align_to_calendar(RawObservations(((D(2015, 1, 3), 1.0),)), cal)

    def test_duplicate_date(self):
        with pytest.raises(DuplicateDate):
            RawObservations(((D(2015, 1, 5), 1.0), (D(2015, 1, 5), 2.0)))


class TestTransforms:
    def test_lag_shifts_dates_forward(self):
        s = make_series([1, 2, 3, 4, 5])
        lagged = lag(s, 2)
        assert lagged.start_date == D(2015, 1, 7)
        assert lagged.values.tolist() == [1, 2, 3]
        assert lagged.value_at(D(2015, 1, 9)) == s.value_at(D(2015, 1, 7))

    def test_lag_cap(self):
        s = make_series(range(10))
        with pytest.raises(LagTooLarge):
            lag(s, 4)
        with pytest.raises(LagTooLarge):
            lag(s, 0)
        with pytest.raises(LagExceedsLength):
            lag(make_series([1, 2]), 2)

    def test_difference(self):
        s = make_series([1, 4, 9, 16])
        assert difference(s).values.tolist() == [3, 5, 7]
        assert difference(s, 2).values.tolist() == [2, 2]
        assert difference(s, 2).start_date == D(2015, 1, 7)
        with pytest.raises(OrderExceedsLength):
            difference(s, 4)

    def test_split_and_concatenate(self):
        s = make_series(range(10))
        train, test = split(s, D(2015, 1, 9))
        assert len(train) == 5 and test.start_date == D(2015, 1, 12)
        assert concatenate(train, test) == s

    def test_split_bounds(self):
        s = make_series(range(5))
        with pytest.raises(BoundaryOutOfRange):
            split(s, D(2015, 1, 9))
        with pytest.raises(BoundaryOutOfRange):
            split(s, D(2015, 1, 5))


class TestSignalSet:
    def test_inner_join_truncates(self):
        a = make_series(range(6), name="a")
        b = make_series(range(4), name="b", start=D(2015, 1, 7))
        joined = inner_join([a, b])
        assert joined.names == ["a", "b"]
        assert joined.n_obs == 4
        assert joined["a"].values.tolist() == [2, 3, 4, 5]

    def test_inner_join_errors(self, nyse_2015):
        a = make_series(range(3), name="a")
        with pytest.raises(EmptyIntersection):
            inner_join([a, make_series(range(3), name="b", start=D(2015, 2, 2))])
        with pytest.raises(CalendarMismatch):
            inner_join([a, make_series(range(3), name="b", calendar=nyse_2015)])

    def test_requires_shared_dates(self):
        with pytest.raises(ValueError):
            SignalSet([make_series(range(3), name="a"), make_series(range(4), name="b")])

    def test_wide_csv_round_trip(self, cal):
        ss = SignalSet([make_series([1.5, 2.5], name="a"), make_series([0.1, 0.2], name="b")])
        buf = io.StringIO()
        ss.to_csv(buf)
        assert buf.getvalue().splitlines()[0] == "date,a,b"
        buf.seek(0)
        back = SignalSet.from_csv(buf, cal)
        assert back.names == ["a", "b"]
        np.testing.assert_array_equal(back.matrix(), ss.matrix())
