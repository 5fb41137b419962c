"""Daily Twitter-style signals: message counts, lexicon sentiment, emotionality, IDF complexity."""

from __future__ import annotations

import datetime as dt
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

from .errors import EmptyCorpus, OutOfRange
from .series import DailySeries, RawObservations, TradingCalendar, align_to_calendar

NEUTRAL = 0.5

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION = re.compile(r"@\w+")
_TOKEN = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class Document:
    """One timestamped text item matched by a query."""

    timestamp: dt.datetime
    text: str
    source: Literal["tweet", "news"] = "tweet"
    query: str = ""

    def __post_init__(self):
        text = " ".join(self.text.split())
        if not text:
            raise ValueError("document text is empty")
        if self.source not in ("tweet", "news"):
            raise ValueError(f"unknown document source {self.source!r}")
        ts = self.timestamp
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=dt.timezone.utc)
        object.__setattr__(self, "timestamp", ts.astimezone(dt.timezone.utc))
        object.__setattr__(self, "text", text)

    @property
    def day(self) -> dt.date:
        return self.timestamp.date()


@dataclass(frozen=True)
class Lexicon:
    positive: frozenset[str]
    negative: frozenset[str]

    def __post_init__(self):
        pos = frozenset(t.lower() for t in self.positive)
        neg = frozenset(t.lower() for t in self.negative)
        clash = pos & neg
        if clash:
            raise ValueError(f"tokens in both polarity lists: {sorted(clash)[:5]}")
        object.__setattr__(self, "positive", pos)
        object.__setattr__(self, "negative", neg)

    @classmethod
    def from_files(cls, positive_path, negative_path) -> Lexicon:
        """Load two plain-text token lists, one token per line (``#`` comments allowed)."""
        return cls(_read_token_list(positive_path), _read_token_list(negative_path))


def _read_token_list(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(
            line.strip().lower() for line in fh if line.strip() and not line.lstrip().startswith("#")
        )


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens of length >= 2, with URLs and @-mentions removed."""
    text = _MENTION.sub(" ", _URL.sub(" ", text))
    return [t for t in _TOKEN.findall(text.lower()) if len(t) >= 2]


def lexicon_ratio(tokens: Iterable[str], lex: Lexicon) -> float:
    pos = neg = 0
    for t in tokens:
        if t in lex.positive:
            pos += 1
        elif t in lex.negative:
            neg += 1
    return pos / (pos + neg) if pos + neg else NEUTRAL


def sentiment_score(doc: Document | str, lex: Lexicon) -> float:
    """Share of positive among polar tokens; 0.5 when no lexicon token occurs."""
    text = doc.text if isinstance(doc, Document) else doc
    return lexicon_ratio(tokenize(text), lex)


def emotionality(score: float) -> float:
    if not 0.0 <= score <= 1.0:
        raise OutOfRange(f"sentiment {score} outside [0, 1]")
    return 2.0 * abs(score - NEUTRAL)


@dataclass(frozen=True)
class IdfTable:
    doc_count: int
    doc_freq: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.doc_count < 1:
            raise EmptyCorpus("IDF table needs at least one document")
        for tok, df in self.doc_freq.items():
            if not 1 <= df <= self.doc_count:
                raise ValueError(f"document frequency of {tok!r} is {df}, outside 1..{self.doc_count}")

    def idf(self, token: str) -> float:
        # unseen tokens count as appearing in one document
        return math.log(self.doc_count / self.doc_freq.get(token, 1))


def build_idf(corpus: Iterable[Document | str]) -> IdfTable:
    df: Counter[str] = Counter()
    n = 0
    for doc in corpus:
        text = doc.text if isinstance(doc, Document) else doc
        df.update(set(tokenize(text)))
        n += 1
    if n == 0:
        raise EmptyCorpus("cannot build IDF from an empty corpus")
    return IdfTable(n, dict(df))


def complexity_score(doc: Document | str, idf: IdfTable) -> float:
    """Mean IDF over the document's tokens (0 for a document without tokens)."""
    tokens = tokenize(doc.text if isinstance(doc, Document) else doc)
    if not tokens:
        return 0.0
    return math.fsum(idf.idf(t) for t in tokens) / len(tokens)


@dataclass(frozen=True)
class DailyTextSignals:
    messages: DailySeries
    sentiment: DailySeries
    emotionality: DailySeries
    complexity: DailySeries

    def as_list(self) -> list[DailySeries]:
        return [self.messages, self.sentiment, self.emotionality, self.complexity]


def aggregate_daily(
    docs: Sequence[Document],
    lex: Lexicon,
    cal: TradingCalendar,
    prefix: str = "twitter",
    idf: IdfTable | None = None,
) -> DailyTextSignals:
    """Collapse documents into four business-day series.

    IDF is fitted once on the whole corpus. Business days with no documents
    get ``messages=0``, ``sentiment=0.5`` and ``complexity=0``. Documents on
    weekends or holidays are dropped by calendar alignment. Daily
    emotionality is taken from the day's mean sentiment.
    """
    docs = list(docs)
    if not docs:
        raise EmptyCorpus("no documents to aggregate")
    idf = build_idf(docs) if idf is None else idf

    sent_by_day: dict[dt.date, list[float]] = defaultdict(list)
    cplx_by_day: dict[dt.date, list[float]] = defaultdict(list)
    for doc in docs:
        sent_by_day[doc.day].append(sentiment_score(doc, lex))
        cplx_by_day[doc.day].append(complexity_score(doc, idf))

    first, last = min(sent_by_day), max(sent_by_day)
    days = sorted(set(sent_by_day) | {d.astype(dt.date) for d in cal.business_days(first, last)})
    msgs, sent, emo, cplx = {}, {}, {}, {}
    for day in days:
        scores = sent_by_day.get(day)
        if scores:
            msgs[day] = float(len(scores))
            sent[day] = math.fsum(scores) / len(scores)
            cplx[day] = math.fsum(cplx_by_day[day]) / len(scores)
        else:
            msgs[day], sent[day], cplx[day] = 0.0, NEUTRAL, 0.0
        emo[day] = emotionality(sent[day])

    def _series(name: str, values: dict) -> DailySeries:
        return align_to_calendar(RawObservations.from_mapping(values), cal, f"{prefix}_{name}", "text_metrics")

    return DailyTextSignals(
        messages=_series("messages", msgs),
        sentiment=_series("sentiment", sent),
        emotionality=_series("emotionality", emo),
        complexity=_series("complexity", cplx),
    )
