"""Streaming parsers for price CSVs, Google Trends exports, Wikipedia pageviews,
tweet dumps and GDELT Global Knowledge Graph files.

Every parser accepts a path, a binary stream or a text stream; gzip input is
detected from its magic bytes. Record accounting goes to an optional
:class:`ParseStats`, so callers can check that ``kept + skipped + filtered``
equals the number of records read.
"""

from __future__ import annotations

import contextlib
import csv
import datetime as dt
import gzip
import io
import json
import logging
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterator, Sequence

from .errors import MalformedRecord, MalformedRow, NonPositivePrice, VolumeOutOfRange
from .series import RawObservations
from .text import Document

logger = logging.getLogger(__name__)

# GKG 1.0 daily files: DATE NUMARTS COUNTS THEMES LOCATIONS PERSONS ORGANIZATIONS TONE CAMEOEVENTIDS SOURCES SOURCEURLS
GKG_COLUMNS = (
    "DATE", "NUMARTS", "COUNTS", "THEMES", "LOCATIONS", "PERSONS",
    "ORGANIZATIONS", "TONE", "CAMEOEVENTIDS", "SOURCES", "SOURCEURLS",
)


@dataclass
class ParseStats:
    records: int = 0
    kept: int = 0
    skipped: int = 0
    filtered: int = 0

    def balanced(self) -> bool:
        return self.kept + self.skipped + self.filtered == self.records

    def as_dict(self) -> dict[str, int]:
        return {"records": self.records, "kept": self.kept, "skipped": self.skipped, "filtered": self.filtered}


@contextlib.contextmanager
def open_text(source) -> Iterator[IO[str]]:
    """Yield a text stream for a path or stream, transparently gunzipping."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as raw:
            with open_text(raw) as fh:
                yield fh
        return
    if isinstance(source, io.TextIOBase):
        yield source
        return
    buffered = source if hasattr(source, "peek") else io.BufferedReader(source)
    head = buffered.peek(2)[:2]
    if head == b"\x1f\x8b":
        with gzip.open(buffered, "rt", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        fh = io.TextIOWrapper(buffered, encoding="utf-8", newline="")
        try:
            yield fh
        finally:
            fh.detach()


def _iso_date(text: str, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise MalformedRow(line, f"bad date {text!r}") from None


def _compact_date(text: str) -> dt.date:
    """``YYYY-MM-DD`` or the compact ``YYYYMMDD[HH...]`` form used by GDELT and Wikimedia."""
    text = text.strip()
    if len(text) >= 8 and text[:8].isdigit():
        return dt.date(int(text[:4]), int(text[4:6]), int(text[6:8]))
    return dt.date.fromisoformat(text[:10])


def _two_column_rows(fh, header: tuple[str, str]) -> Iterator[tuple[int, list[str]]]:
    reader = csv.reader(fh)
    first = next(reader, None)
    if first is None:
        return
    if tuple(c.strip().lower() for c in first[:2]) != header or len(first) != 2:
        raise MalformedRow(1, f"expected header {','.join(header)}")
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise MalformedRow(line, f"expected 2 fields, got {len(row)}")
        yield line, row


def parse_price_csv(stream, stats: ParseStats | None = None) -> RawObservations:
    """Read a ``date,value`` price file; every value must be finite and positive."""
    stats = stats if stats is not None else ParseStats()
    entries = []
    with open_text(stream) as fh:
        for line, (date_txt, value_txt) in _two_column_rows(fh, ("date", "value")):
            stats.records += 1
            day = _iso_date(date_txt, line)
            try:
                value = float(value_txt)
            except ValueError:
                raise MalformedRow(line, f"bad value {value_txt!r}") from None
            if not math.isfinite(value):
                raise MalformedRow(line, f"non-finite value {value_txt!r}")
            if value <= 0:
                raise NonPositivePrice(line, f"price {value} is not positive")
            entries.append((day, value))
            stats.kept += 1
    return _raw(entries)


def parse_trends_csv(stream, query: str = "", stats: ParseStats | None = None) -> RawObservations:
    """Read a ``date,relative_volume`` Trends export (integers 0..100, any date step)."""
    stats = stats if stats is not None else ParseStats()
    entries = []
    with open_text(stream) as fh:
        for line, (date_txt, vol_txt) in _two_column_rows(fh, ("date", "relative_volume")):
            stats.records += 1
            day = _iso_date(date_txt, line)
            try:
                vol = int(vol_txt.strip())
            except ValueError:
                raise MalformedRow(line, f"bad volume {vol_txt!r} for {query!r}") from None
            if not 0 <= vol <= 100:
                raise VolumeOutOfRange(line, f"volume {vol} outside 0..100")
            entries.append((day, float(vol)))
            stats.kept += 1
    return _raw(entries)


def _raw(entries) -> RawObservations:
    return RawObservations(tuple(entries))


def _normalize_title(title: str) -> str:
    return title.replace("_", " ").strip()


def parse_pageviews(stream, titles: Sequence[str], stats: ParseStats | None = None) -> dict[str, RawObservations]:
    """Daily views per requested article from newline-delimited JSON records.

    Records need ``date``, ``article`` and ``views``; repeated
    ``(date, article)`` pairs are summed and unrequested articles are
    counted as filtered.
    """
    stats = stats if stats is not None else ParseStats()
    wanted = {_normalize_title(t): t for t in titles}
    counts: dict[str, dict[dt.date, int]] = {t: defaultdict(int) for t in titles}
    with open_text(stream) as fh:
        for line, text in enumerate(fh, 1):
            if not text.strip():
                continue
            stats.records += 1
            try:
                rec = json.loads(text)
                day = _compact_date(str(rec["date"]))
                article = str(rec["article"])
                views = rec["views"]
            except (ValueError, KeyError, TypeError):
                raise MalformedRow(line, "pageview record needs date, article and views") from None
            if isinstance(views, bool) or not isinstance(views, int) or views < 0:
                raise MalformedRow(line, f"views must be a non-negative integer, got {views!r}")
            title = wanted.get(_normalize_title(article))
            if title is None:
                stats.filtered += 1
                continue
            counts[title][day] += views
            stats.kept += 1
    return {t: RawObservations.from_mapping({d: float(v) for d, v in counts[t].items()}) for t in titles}


def _parse_timestamp(value: str) -> dt.datetime:
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = dt.datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=dt.timezone.utc)
    return ts.astimezone(dt.timezone.utc)


def parse_tweets(
    stream,
    query_terms: Sequence[str],
    exclusion_terms: Sequence[str] = (),
    stats: ParseStats | None = None,
) -> list[Document]:
    """Keep tweets containing any query term and no exclusion term (case-insensitive substrings).

    Broken records are skipped with a warning rather than aborting the file.
    """
    stats = stats if stats is not None else ParseStats()
    queries = [q.lower() for q in query_terms]
    exclusions = [x.lower() for x in exclusion_terms]
    docs = []
    with open_text(stream) as fh:
        for line, text in enumerate(fh, 1):
            if not text.strip():
                continue
            stats.records += 1
            try:
                rec = json.loads(text)
                body = rec["text"]
                if not isinstance(body, str) or not body.strip():
                    raise ValueError("empty text")
                ts = _parse_timestamp(str(rec["timestamp"]))
            except (ValueError, KeyError, TypeError) as exc:
                stats.skipped += 1
                logger.warning("tweets line %d skipped: %s", line, exc)
                continue
            low = body.lower()
            match = next((q for q in queries if q in low), None)
            if match is None or any(x in low for x in exclusions):
                stats.filtered += 1
                continue
            docs.append(Document(ts, body, "tweet", match))
            stats.kept += 1
    return docs


def parse_gkg(
    stream,
    query_terms: Sequence[str],
    match_field: str = "themes",
    stats: ParseStats | None = None,
) -> tuple[RawObservations, RawObservations]:
    """Daily matching-article and organization-mention counts from GKG records.

    A record matches when a query term occurs (case-insensitively) in its
    ``THEMES`` field, or anywhere in the record with ``match_field="all"``.
    Each matching record adds one article and one mention per
    ``;``-separated organization entry. Every day that appears in the input
    gets a count, zero included. Malformed records are skipped with a
    warning.
    """
    if match_field not in ("themes", "all"):
        raise ValueError("match_field must be 'themes' or 'all'")
    stats = stats if stats is not None else ParseStats()
    terms = [t.lower() for t in query_terms]
    articles: dict[dt.date, int] = {}
    orgs: dict[dt.date, int] = {}
    index = {name: i for i, name in enumerate(GKG_COLUMNS)}
    with open_text(stream) as fh:
        for line, raw in enumerate(fh, 1):
            text = raw.rstrip("\r\n")
            if not text.strip():
                continue
            fields = text.split("\t")
            if line == 1 and fields[0].strip().upper() == "DATE":
                index = {name.strip().upper(): i for i, name in enumerate(fields)}
                continue
            stats.records += 1
            try:
                record = _gkg_record(fields, index, line)
            except MalformedRecord as exc:
                stats.skipped += 1
                logger.warning("GKG %s; record skipped", exc)
                continue
            day, themes, organizations = record
            articles.setdefault(day, 0)
            orgs.setdefault(day, 0)
            haystack = themes.lower() if match_field == "themes" else text.lower()
            if not any(t in haystack for t in terms):
                stats.filtered += 1
                continue
            articles[day] += 1
            orgs[day] += len([o for o in organizations.split(";") if o.strip()])
            stats.kept += 1
    return (
        RawObservations.from_mapping({d: float(v) for d, v in articles.items()}),
        RawObservations.from_mapping({d: float(v) for d, v in orgs.items()}),
    )


def _gkg_record(fields: list[str], index: dict[str, int], line: int):
    try:
        di, ti, oi = index["DATE"], index["THEMES"], index["ORGANIZATIONS"]
    except KeyError:
        raise MalformedRecord(line, "header lacks DATE/THEMES/ORGANIZATIONS") from None
    if len(fields) <= max(di, ti, oi):
        raise MalformedRecord(line, f"only {len(fields)} fields")
    date_txt = fields[di].strip()
    if len(date_txt) != 8 or not date_txt.isdigit():
        raise MalformedRecord(line, f"bad DATE {date_txt!r}")
    try:
        day = dt.date(int(date_txt[:4]), int(date_txt[4:6]), int(date_txt[6:]))
    except ValueError:
        raise MalformedRecord(line, f"bad DATE {date_txt!r}") from None
    return day, fields[ti], fields[oi]


def write_observations_csv(raw: RawObservations, path) -> None:
    raw.to_csv(path)
