from __future__ import annotations

import datetime as dt
import gzip
import io
import json
import logging
from collections import Counter
from pathlib import Path

import pytest

from crudecast import ingest
from crudecast.errors import MalformedRow, NonPositivePrice, VolumeOutOfRange
from crudecast.series import RawObservations

GOLDEN = Path(__file__).parent / "golden"
INPUTS = GOLDEN / "inputs"
EXPECTED = GOLDEN / "expected"
QUERIES = ("crude", "oil", "opec")
EXCLUSIONS = ("olive oil", "essential oil")


def _csv_bytes(raw: RawObservations) -> bytes:
    buf = io.StringIO()
    raw.to_csv(buf)
    return buf.getvalue().encode("utf-8")


def _daily_counts(docs) -> RawObservations:
    return RawObservations.from_mapping({d: float(n) for d, n in Counter(doc.day for doc in docs).items()})


def run_golden_parsers() -> tuple[dict[str, bytes], dict[str, dict]]:
    """Every parser on the checked-in inputs; returns CSV bytes and record accounting."""
    out, stats = {}, {}

    st = ingest.ParseStats()
    out["price.csv"] = _csv_bytes(ingest.parse_price_csv(INPUTS / "price.csv", st))
    stats["price"] = st

    st = ingest.ParseStats()
    out["trends.csv"] = _csv_bytes(ingest.parse_trends_csv(INPUTS / "trends.csv", "price of oil", st))
    stats["trends"] = st

    st = ingest.ParseStats()
    views = ingest.parse_pageviews(INPUTS / "pageviews.jsonl", ["Price of oil", "OPEC"], st)
    out["pageviews_price_of_oil.csv"] = _csv_bytes(views["Price of oil"])
    out["pageviews_opec.csv"] = _csv_bytes(views["OPEC"])
    stats["pageviews"] = st

    st = ingest.ParseStats()
    docs = ingest.parse_tweets(INPUTS / "tweets.jsonl", QUERIES, EXCLUSIONS, st)
    out["tweets_daily_count.csv"] = _csv_bytes(_daily_counts(docs))
    stats["tweets"] = st

    for label, path, field in (
        ("gkg_clean", INPUTS / "gkg_clean.tsv", "themes"),
        ("gkg_corrupt", INPUTS / "gkg_corrupt.tsv.gz", "themes"),
        ("gkg_corrupt_all", INPUTS / "gkg_corrupt.tsv.gz", "all"),
    ):
        st = ingest.ParseStats()
        arts, orgs = ingest.parse_gkg(path, ("oil", "opec"), field, st)
        out[f"{label}_articles.csv"] = _csv_bytes(arts)
        out[f"{label}_organizations.csv"] = _csv_bytes(orgs)
        stats[label] = st
    return out, {k: v.as_dict() for k, v in stats.items()}


class TestGoldenFiles:
    def test_outputs_match_bit_exactly(self):
        produced, _ = run_golden_parsers()
        expected = {p.name: p.read_bytes() for p in EXPECTED.glob("*.csv")}
        assert sorted(produced) == sorted(expected)
        for name, data in produced.items():
            assert data == expected[name], name

    def test_record_accounting(self):
        _, stats = run_golden_parsers()
        assert stats == json.loads((EXPECTED / "parse_stats.json").read_text())
        for s in stats.values():
            assert s["kept"] + s["skipped"] + s["filtered"] == s["records"]

    def test_corrupted_gkg_warns_per_skipped_record(self, caplog):
        with caplog.at_level(logging.WARNING, logger="crudecast.ingest"):
            ingest.parse_gkg(INPUTS / "gkg_corrupt.tsv.gz", ("oil",))
        msgs = [r.getMessage() for r in caplog.records]
        assert len(msgs) == 3
        assert any("line 2" in m for m in msgs)
        assert any("2015-01-06" in m for m in msgs)


class TestPriceParser:
    def test_nonpositive_price_is_fatal_with_line(self):
        with pytest.raises(NonPositivePrice) as err:
            ingest.parse_price_csv(io.StringIO("date,value\n2015-01-02,50\n2015-01-05,0\n"))
        assert err.value.line == 3

    def test_bad_header(self):
        with pytest.raises(MalformedRow):
            ingest.parse_price_csv(io.StringIO("day,price\n2015-01-02,50\n"))

    def test_bad_date_and_value(self):
        with pytest.raises(MalformedRow):
            ingest.parse_price_csv(io.StringIO("date,value\n2015-02-30,50\n"))
        with pytest.raises(MalformedRow):
            ingest.parse_price_csv(io.StringIO("date,value\n2015-01-02,abc\n"))
        with pytest.raises(MalformedRow):
            ingest.parse_price_csv(io.StringIO("date,value\n2015-01-02,nan\n"))

    def test_gzip_and_binary_streams(self):
        text = b"date,value\n2015-01-02,50.5\n"
        a = ingest.parse_price_csv(io.BytesIO(text))
        b = ingest.parse_price_csv(io.BytesIO(gzip.compress(text)))
        assert a.entries == b.entries == ((dt.date(2015, 1, 2), 50.5),)


class TestTrendsParser:
    @pytest.mark.parametrize("value", ["101", "-1"])
    def test_out_of_range(self, value):
        with pytest.raises(VolumeOutOfRange):
            ingest.parse_trends_csv(io.StringIO(f"date,relative_volume\n2015-01-04,{value}\n"))

    def test_non_integer(self):
        with pytest.raises(MalformedRow):
            ingest.parse_trends_csv(io.StringIO("date,relative_volume\n2015-01-04,4.5\n"))


class TestPageviews:
    def test_missing_field_is_fatal(self):
        with pytest.raises(MalformedRow):
            ingest.parse_pageviews(io.StringIO('{"date": "2015-01-05", "views": 3}\n'), ["OPEC"])

    def test_negative_views(self):
        rec = '{"date": "2015-01-05", "article": "OPEC", "views": -3}\n'
        with pytest.raises(MalformedRow):
            ingest.parse_pageviews(io.StringIO(rec), ["OPEC"])

    def test_title_with_no_records_is_empty(self):
        got = ingest.parse_pageviews(io.StringIO(""), ["OPEC"])
        assert len(got["OPEC"]) == 0


class TestTweets:
    def test_documents_carry_matched_query_and_utc_day(self):
        docs = ingest.parse_tweets(INPUTS / "tweets.jsonl", QUERIES, EXCLUSIONS)
        assert [d.query for d in docs] == ["crude", "oil", "oil", "crude"]
        assert docs[2].timestamp == dt.datetime(2015, 1, 6, 13, tzinfo=dt.timezone.utc)

    def test_exclusion_beats_query(self):
        docs = ingest.parse_tweets(io.StringIO('{"timestamp": "2015-01-05T00:00:00Z", "text": "OLIVE OIL"}\n'),
                                   ["oil"], ["olive oil"])
        assert docs == []


class TestGkg:
    def test_match_field_validation(self):
        with pytest.raises(ValueError):
            ingest.parse_gkg(io.StringIO(""), ["oil"], match_field="tone")

    def test_header_row_remaps_columns(self):
        text = "DATE\tORGANIZATIONS\tTHEMES\n20150105\ta;b;c\tENV_OIL\n"
        arts, orgs = ingest.parse_gkg(io.StringIO(text), ["oil"])
        assert arts.entries == ((dt.date(2015, 1, 5), 1.0),)
        assert orgs.entries == ((dt.date(2015, 1, 5), 3.0),)
