from __future__ import annotations

import datetime as dt
import math

import pytest

from crudecast.errors import EmptyCorpus, OutOfRange
from crudecast.series import TradingCalendar
from crudecast.text import (
    Document,
    IdfTable,
    Lexicon,
    aggregate_daily,
    build_idf,
    complexity_score,
    emotionality,
    sentiment_score,
    tokenize,
)

LEX = Lexicon(frozenset({"rally", "gain", "Good"}), frozenset({"slump", "fear"}))
UTC = dt.timezone.utc


def doc(text, day=5, hour=12):
    return Document(dt.datetime(2015, 1, day, hour, tzinfo=UTC), text)


class TestTokenize:
    def test_strips_urls_mentions_and_short_tokens(self):
        assert tokenize("@trader Oil's rally! http://t.co/x a b12 fear_index") == [
            "oil", "rally", "b12", "fear", "index"
        ]

    def test_unicode_letters_kept(self):
        assert tokenize("Ölpreis fällt") == ["ölpreis", "fällt"]


class TestSentiment:
    def test_ratio(self):
        # two positive, one negative
        assert sentiment_score("Rally and gain despite fear", LEX) == pytest.approx(2 / 3, abs=1e-15)

    def test_neutral_without_polar_tokens(self):
        assert sentiment_score("oil price today", LEX) == 0.5

    def test_lexicon_is_case_folded_and_disjoint(self):
        assert "good" in LEX.positive
        with pytest.raises(ValueError):
            Lexicon(frozenset({"up"}), frozenset({"UP"}))

    @pytest.mark.parametrize("score, expected", [(0.5, 0.0), (1.0, 1.0), (0.0, 1.0), (0.75, 0.5)])
    def test_emotionality(self, score, expected):
        assert emotionality(score) == expected

    def test_emotionality_range(self):
        with pytest.raises(OutOfRange):
            emotionality(1.2)


class TestIdf:
    def test_hand_values(self):
        idf = build_idf(["oil up", "oil down", "opec oil"])
        assert idf.doc_count == 3
        assert idf.idf("oil") == 0.0
        assert idf.idf("opec") == pytest.approx(math.log(3), abs=1e-15)
        # unseen tokens behave like df = 1
        assert idf.idf("zzz") == pytest.approx(math.log(3), abs=1e-15)

    def test_complexity_is_mean_idf(self):
        idf = build_idf(["oil up", "oil down", "opec oil"])
        assert complexity_score("oil opec", idf) == pytest.approx(math.log(3) / 2, abs=1e-15)
        assert complexity_score("!!", idf) == 0.0

    def test_invalid_tables(self):
        with pytest.raises(EmptyCorpus):
            build_idf([])
        with pytest.raises(ValueError):
            IdfTable(2, {"x": 3})


class TestAggregateDaily:
    def test_four_series_with_defaults_on_empty_days(self):
        docs = [
            doc("oil rally", day=5),
            doc("oil slump fear", day=5, hour=18),
            doc("opec gain", day=7),
            doc("weekend oil rally", day=10),  # Saturday, dropped by alignment
        ]
        sig = aggregate_daily(docs, LEX, TradingCalendar())
        assert [s.name for s in sig.as_list()] == [
            "twitter_messages", "twitter_sentiment", "twitter_emotionality", "twitter_complexity"
        ]
        assert sig.messages.values.tolist() == [2.0, 0.0, 1.0, 0.0, 0.0]
        # day mean sentiment (1 + 0) / 2; empty Jan 6, 8 and 9 are neutral
        assert sig.sentiment.values.tolist() == [0.5, 0.5, 1.0, 0.5, 0.5]
        assert sig.emotionality.values.tolist() == [0.0, 0.0, 1.0, 0.0, 0.0]
        assert sig.complexity.values[1] == 0.0
        assert sig.messages.end_date == dt.date(2015, 1, 9)

    def test_complexity_uses_corpus_idf(self):
        docs = [doc("oil rally"), doc("oil slump", day=6)]
        sig = aggregate_daily(docs, LEX, TradingCalendar())
        # "oil" has idf 0, the other token ln 2
        assert sig.complexity.values.tolist() == pytest.approx([math.log(2) / 2] * 2, abs=1e-15)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            aggregate_daily([], LEX, TradingCalendar())


class TestDocument:
    def test_naive_timestamp_is_utc_and_text_normalised(self):
        d = Document(dt.datetime(2015, 1, 5, 23, 30), "  oil \n price ")
        assert d.timestamp.tzinfo is UTC or d.timestamp.utcoffset() == dt.timedelta(0)
        assert d.text == "oil price"

    def test_offset_moves_day(self):
        tz = dt.timezone(dt.timedelta(hours=-5))
        assert Document(dt.datetime(2015, 1, 5, 21, tzinfo=tz), "oil").day == dt.date(2015, 1, 6)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Document(dt.datetime(2015, 1, 5), "   ")
