from __future__ import annotations

import datetime as dt
import io

import numpy as np
import pytest

hypothesis = pytest.importorskip("hypothesis")
from hypothesis import given, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402

from crudecast.arima import ArimaParams, ar_to_pacf, pacf_to_ar  # noqa: E402
from crudecast.evaluation import mae, rmse  # noqa: E402
from crudecast.series import (  # noqa: E402
    DailySeries,
    RawObservations,
    SignalSet,
    TradingCalendar,
    align_to_calendar,
    concatenate,
    lag,
    split,
)
from crudecast.text import Lexicon, emotionality, sentiment_score  # noqa: E402

CAL = TradingCalendar(holidays=(dt.date(2015, 1, 19), dt.date(2015, 2, 16), dt.date(2015, 4, 3)))
finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
days = st.dates(min_value=dt.date(2015, 1, 1), max_value=dt.date(2015, 6, 30))


@st.composite
def raw_observations(draw):
    mapping = draw(st.dictionaries(days, finite, min_size=1, max_size=40))
    return RawObservations.from_mapping(mapping)


@st.composite
def series(draw, min_size=2):
    values = draw(st.lists(finite, min_size=min_size, max_size=60))
    start = CAL.shift(draw(days), 0)
    return DailySeries("s", CAL, start, values)


class TestSeriesProperties:
    @given(raw_observations())
    def test_alignment_keeps_business_anchors_and_stays_in_hull(self, raw):
        business = [(d, v) for d, v in raw.sorted() if CAL.is_business_day(d)]
        if not business:
            return
        s = align_to_calendar(raw, CAL)
        assert len(s) == CAL.count_between(business[0][0], business[-1][0]) + 1
        for d, v in business:
            assert s.value_at(d) == v
        lo, hi = min(v for _, v in business), max(v for _, v in business)
        assert np.all(s.values >= lo - 1e-9) and np.all(s.values <= hi + 1e-9)

    @given(series(min_size=4), st.integers(1, 3))
    def test_lag_reads_earlier_business_day(self, s, k):
        lagged = lag(s, k)
        for d in lagged.date_list():
            assert lagged.value_at(d) == s.value_at(CAL.shift(d, -k))

    @given(series(min_size=3), st.data())
    def test_split_then_concatenate_is_identity(self, s, data):
        i = data.draw(st.integers(1, len(s) - 2))
        train, test = split(s, s.date_list()[i])
        assert len(train) == i + 1
        assert concatenate(train, test) == s

    @given(st.lists(st.lists(finite, min_size=3, max_size=3), min_size=1, max_size=20))
    def test_wide_csv_round_trip_is_exact(self, rows):
        m = np.array(rows)
        ss = SignalSet(DailySeries(n, CAL, dt.date(2015, 1, 5), m[:, j]) for j, n in enumerate("abc"))
        buf = io.StringIO()
        ss.to_csv(buf)
        buf.seek(0)
        np.testing.assert_array_equal(SignalSet.from_csv(buf, CAL).matrix(), m)


class TestModelProperties:
    @given(st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=6))
    def test_pacf_map_lands_in_stationary_region(self, r):
        phi = pacf_to_ar(np.array(r))
        ArimaParams(phi=tuple(phi))  # raises if not stationary
        np.testing.assert_allclose(ar_to_pacf(phi), r, atol=1e-8)


class TestMetricProperties:
    @given(st.lists(st.tuples(finite, finite), min_size=1, max_size=30))
    def test_rmse_dominates_mae(self, pairs):
        a, p = np.array(pairs).T
        assert rmse(a, p) >= mae(a, p) - 1e-9 * (1 + mae(a, p))
        assert mae(a, p) >= 0

    @given(st.lists(st.tuples(finite, finite), min_size=1, max_size=30), st.randoms())
    def test_rmse_ignores_order(self, pairs, rnd):
        a, p = np.array(pairs).T
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        b, q = np.array(shuffled).T
        assert rmse(a, p) == pytest.approx(rmse(b, q), rel=1e-12, abs=1e-12)


LEX = Lexicon(frozenset({"good", "up"}), frozenset({"bad", "down"}))


class TestTextProperties:
    @settings(max_examples=200)
    @given(st.lists(st.sampled_from(["good", "up", "bad", "down", "oil", "the", "@x", "http://t.co/a"]), max_size=30))
    def test_sentiment_and_emotionality_bounded(self, words):
        s = sentiment_score(" ".join(words), LEX)
        assert 0.0 <= s <= 1.0
        assert 0.0 <= emotionality(s) <= 1.0
