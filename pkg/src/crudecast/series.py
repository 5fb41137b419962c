"""Business-day calendar and the date-indexed series every stage passes around.

A :class:`DailySeries` stores one value per business day of its
:class:`TradingCalendar`, starting at ``start_date``. Dates are never stored
explicitly; they are regenerated from the calendar, which makes a gap in the
grid unrepresentable.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    BoundaryOutOfRange,
    CalendarMismatch,
    DuplicateDate,
    EmptyAfterAlignment,
    EmptyIntersection,
    LagExceedsLength,
    LagTooLarge,
    OrderExceedsLength,
)

MAX_LAG = 3
_WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def to_date(value) -> dt.date:
    """Coerce ISO strings, datetimes and numpy datetime64 to ``datetime.date``."""
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]").astype(dt.date)
    if isinstance(value, str):
        return dt.date.fromisoformat(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a date")


@dataclass(frozen=True)
class TradingCalendar:
    """Five-day (by default) business calendar with an optional holiday list.

    Holidays falling on weekend days are dropped on construction, and the
    remaining ones are stored sorted and de-duplicated.
    """

    weekend_days: frozenset[int] = frozenset({5, 6})
    holidays: tuple[dt.date, ...] = ()

    def __post_init__(self):
        weekend = frozenset(int(d) for d in self.weekend_days)
        if not weekend <= set(range(7)):
            raise ValueError("weekend days must be weekday indices 0..6")
        if len(weekend) == 7:
            raise ValueError("a calendar needs at least one business weekday")
        hol = sorted({to_date(h) for h in self.holidays})
        hol = tuple(h for h in hol if h.weekday() not in weekend)
        object.__setattr__(self, "weekend_days", weekend)
        object.__setattr__(self, "holidays", hol)

    @classmethod
    def from_holiday_file(cls, path, weekend_days: Iterable[int] = (5, 6)) -> TradingCalendar:
        """Load holidays from a text file with one ISO date per line.

        Blank lines and lines starting with ``#`` are ignored.
        """
        holidays = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    holidays.append(dt.date.fromisoformat(line))
        return cls(frozenset(weekend_days), tuple(holidays))

    @cached_property
    def _busdaycal(self) -> np.busdaycalendar:
        mask = [0 if d in self.weekend_days else 1 for d in range(7)]
        return np.busdaycalendar(weekmask=mask, holidays=list(self.holidays))

    def is_business_day(self, day) -> bool:
        return bool(np.is_busday(np.datetime64(to_date(day), "D"), busdaycal=self._busdaycal))

    def business_days(self, start, end) -> np.ndarray:
        """All business days in the closed interval ``[start, end]``."""
        first = np.busday_offset(to_date(start), 0, roll="forward", busdaycal=self._busdaycal)
        last = np.busday_offset(to_date(end), 0, roll="backward", busdaycal=self._busdaycal)
        if last < first:
            return np.array([], dtype="datetime64[D]")
        n = int(np.busday_count(first, last, busdaycal=self._busdaycal)) + 1
        return self.offset_days(first, np.arange(n))

    def offset_days(self, start, steps) -> np.ndarray:
        return np.busday_offset(
            np.datetime64(to_date(start), "D"), steps, roll="forward", busdaycal=self._busdaycal
        )

    def shift(self, day, steps: int) -> dt.date:
        """Move a business day by ``steps`` business days (negative moves back)."""
        return to_date(self.offset_days(day, int(steps)))

    def count_between(self, start, end) -> int:
        """Number of business days in ``[start, end)``."""
        return int(np.busday_count(to_date(start), to_date(end), busdaycal=self._busdaycal))

    def describe(self) -> str:
        weekend = ",".join(_WEEKDAYS[d] for d in sorted(self.weekend_days))
        return f"weekend={weekend}; holidays={len(self.holidays)}"


@dataclass(frozen=True)
class RawObservations:
    """Unaligned ``(date, value)`` pairs as they come out of a parser."""

    entries: tuple[tuple[dt.date, float], ...]

    def __post_init__(self):
        entries = tuple((to_date(d), float(v)) for d, v in self.entries)
        seen = set()
        for d, _ in entries:
            if d in seen:
                raise DuplicateDate(f"duplicate observation for {d.isoformat()}")
            seen.add(d)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_mapping(cls, mapping) -> RawObservations:
        return cls(tuple(sorted(mapping.items())))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def sorted(self) -> list[tuple[dt.date, float]]:
        return sorted(self.entries)

    def to_csv(self, target) -> None:
        """Write canonical ``date,value`` CSV sorted by date."""
        _write_two_column(target, ((d, v) for d, v in self.sorted()))


@dataclass(frozen=True, eq=False)
class DailySeries:
    """Gap-free business-day series.

    ``values[i]`` belongs to the ``i``-th business day counted from
    ``start_date``. Values are a read-only float array and must be finite.
    """

    name: str
    calendar: TradingCalendar
    start_date: dt.date
    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if values.size < 1:
            raise ValueError(f"series '{self.name}' is empty")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"series '{self.name}' contains non-finite values")
        values.flags.writeable = False
        start = to_date(self.start_date)
        if not self.calendar.is_business_day(start):
            raise ValueError(f"start date {start} is not a business day")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start_date", start)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, DailySeries):
            return NotImplemented
        return (
            self.name == other.name
            and self.calendar == other.calendar
            and self.start_date == other.start_date
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return (
            f"DailySeries({self.name!r}, {self.start_date}..{self.end_date}, n={len(self)})"
        )

    @cached_property
    def dates(self) -> np.ndarray:
        """``datetime64[D]`` array of the business days covered."""
        out = self.calendar.offset_days(self.start_date, np.arange(len(self)))
        out.flags.writeable = False
        return out

    @property
    def end_date(self) -> dt.date:
        return to_date(self.dates[-1])

    def date_list(self) -> list[dt.date]:
        return [to_date(d) for d in self.dates]

    def index_of(self, day) -> int:
        """Position of a business day inside this series."""
        day = to_date(day)
        if not self.calendar.is_business_day(day):
            raise KeyError(f"{day} is not a business day")
        i = self.calendar.count_between(self.start_date, day) if day >= self.start_date else -1
        if i < 0 or i >= len(self):
            raise KeyError(f"{day} outside {self!r}")
        return i

    def value_at(self, day) -> float:
        return float(self.values[self.index_of(day)])

    def replace(self, values=None, start_date=None, name=None, provenance=None) -> DailySeries:
        return DailySeries(
            name=self.name if name is None else name,
            calendar=self.calendar,
            start_date=self.start_date if start_date is None else start_date,
            values=self.values if values is None else values,
            provenance=self.provenance if provenance is None else provenance,
        )

    def between(self, start=None, end=None) -> DailySeries:
        """Sub-series on the dates inside ``[start, end]`` (either bound optional)."""
        dates = self.dates
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= dates >= np.datetime64(to_date(start), "D")
        if end is not None:
            mask &= dates <= np.datetime64(to_date(end), "D")
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise EmptyIntersection(f"{self!r} has no dates in [{start}, {end}]")
        return self.replace(values=self.values[idx[0] : idx[-1] + 1], start_date=to_date(dates[idx[0]]))

    def to_csv(self, target) -> None:
        """Write ``date,value`` CSV with ISO dates and round-trip float text."""
        _write_two_column(target, zip(self.date_list(), self.values.tolist()))

    @classmethod
    def from_csv(cls, source, calendar: TradingCalendar, name: str = "", provenance: str = "") -> DailySeries:
        """Read ``date,value`` CSV written by :meth:`to_csv`.

        The dates must already form a contiguous business-day run under
        ``calendar``; use :func:`align_to_calendar` for anything rougher.
        """
        rows = _read_two_column(source)
        if not rows:
            raise ValueError("series CSV has no data rows")
        dates = [d for d, _ in rows]
        expected = calendar.offset_days(dates[0], np.arange(len(dates)))
        if [to_date(d) for d in expected] != dates:
            raise ValueError("CSV dates are not contiguous business days")
        if not name and isinstance(source, (str, os.PathLike)):
            name = os.path.splitext(os.path.basename(os.fspath(source)))[0]
        return cls(name, calendar, dates[0], [v for _, v in rows], provenance)


def concatenate(first: DailySeries, second: DailySeries) -> DailySeries:
    """Join two adjacent pieces of the same series back together."""
    if first.calendar != second.calendar:
        raise CalendarMismatch("cannot concatenate series on different calendars")
    if first.calendar.shift(first.end_date, 1) != second.start_date:
        raise ValueError("series are not adjacent")
    return first.replace(values=np.concatenate([first.values, second.values]))


# -- operations ------------------------------------------------------------


def align_to_calendar(
    raw: RawObservations | Iterable[tuple], cal: TradingCalendar, name: str = "", provenance: str = ""
) -> DailySeries:
    """Place raw observations on the business-day grid.

    Weekend and holiday entries are discarded. Missing business days between
    the first and last surviving entries are filled by linear interpolation
    in business-day steps; nothing is extrapolated beyond either end.
    """
    if not isinstance(raw, RawObservations):
        raw = RawObservations(tuple(raw))
    kept = [(d, v) for d, v in raw.sorted() if cal.is_business_day(d)]
    if not kept:
        raise EmptyAfterAlignment(f"no observations of '{name}' fall on a business day")
    grid = cal.business_days(kept[0][0], kept[-1][0])
    known_pos = np.array([cal.count_between(kept[0][0], d) for d, _ in kept], dtype=float)
    known_val = np.array([v for _, v in kept], dtype=float)
    values = np.interp(np.arange(grid.size, dtype=float), known_pos, known_val)
    # exact copies at anchors, no rounding through interp
    values[known_pos.astype(int)] = known_val
    return DailySeries(name, cal, kept[0][0], values, provenance)


def lag(s: DailySeries, k: int, max_lag: int = MAX_LAG) -> DailySeries:
    """Value of ``s`` from ``k`` business days earlier, indexed by the later date."""
    if k < 1 or k > max_lag:
        raise LagTooLarge(f"lag {k} outside 1..{max_lag}")
    if k >= len(s):
        raise LagExceedsLength(f"lag {k} needs more than {len(s)} observations")
    return s.replace(values=s.values[:-k], start_date=s.calendar.shift(s.start_date, k))


def difference(s: DailySeries, order: int = 1) -> DailySeries:
    if order < 0:
        raise ValueError("differencing order must be non-negative")
    if order == 0:
        return s
    if order >= len(s):
        raise OrderExceedsLength(f"order {order} on a series of length {len(s)}")
    return s.replace(values=np.diff(s.values, n=order), start_date=s.calendar.shift(s.start_date, order))


def split(s: DailySeries, boundary) -> tuple[DailySeries, DailySeries]:
    """Train/test split: train holds dates ``<= boundary``, test the rest."""
    boundary = to_date(boundary)
    if not (s.start_date < boundary < s.end_date):
        raise BoundaryOutOfRange(f"{boundary} not strictly inside {s.start_date}..{s.end_date}")
    n_train = int(np.count_nonzero(s.dates <= np.datetime64(boundary, "D")))
    if n_train < 2:
        raise BoundaryOutOfRange(f"boundary {boundary} leaves fewer than two training points")
    train = s.replace(values=s.values[:n_train])
    test = s.replace(values=s.values[n_train:], start_date=to_date(s.dates[n_train]))
    return train, test


class SignalSet:
    """Ordered, name-keyed collection of series sharing one date grid."""

    def __init__(self, series: Iterable[DailySeries] = ()):
        self._series: dict[str, DailySeries] = {}
        for s in series:
            if s.name in self._series:
                raise ValueError(f"duplicate signal name '{s.name}'")
            self._series[s.name] = s
        items = list(self._series.values())
        if items:
            ref = items[0]
            for s in items[1:]:
                if s.calendar != ref.calendar:
                    raise CalendarMismatch("signals use different calendars")
                if s.start_date != ref.start_date or len(s) != len(ref):
                    raise ValueError("signals in a SignalSet must share dates; use inner_join")

    def __len__(self) -> int:
        return len(self._series)

    def __iter__(self) -> Iterator[DailySeries]:
        return iter(self._series.values())

    def __contains__(self, name) -> bool:
        return name in self._series

    def __getitem__(self, name: str) -> DailySeries:
        return self._series[name]

    def __repr__(self) -> str:
        return f"SignalSet({self.names})"

    @property
    def names(self) -> list[str]:
        return list(self._series)

    @property
    def dates(self) -> np.ndarray:
        return next(iter(self._series.values())).dates

    @property
    def n_obs(self) -> int:
        return len(next(iter(self._series.values()))) if self._series else 0

    def get(self, name, default=None):
        return self._series.get(name, default)

    def select(self, names: Sequence[str]) -> SignalSet:
        return SignalSet([self._series[n] for n in names])

    def matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        names = self.names if names is None else names
        return np.column_stack([self._series[n].values for n in names])

    def to_csv(self, target) -> None:
        """Wide CSV: ``date`` column followed by one column per signal."""
        with _open_target(target) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", *self.names])
            cols = [self._series[n].values.tolist() for n in self.names]
            for i, d in enumerate(next(iter(self)).date_list()):
                w.writerow([d.isoformat(), *(repr(c[i]) for c in cols)])

    @classmethod
    def from_csv(cls, source, calendar: TradingCalendar) -> SignalSet:
        with _open_source(source) as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], [r for r in rows[1:] if r]
        if not header or header[0] != "date":
            raise ValueError("wide signal CSV must start with a 'date' column")
        start = dt.date.fromisoformat(body[0][0])
        return cls(
            DailySeries(name, calendar, start, [float(r[j]) for r in body])
            for j, name in enumerate(header[1:], start=1)
        )


def inner_join(series: Sequence[DailySeries]) -> SignalSet:
    """Truncate every series to the dates they all share."""
    series = list(series)
    if len(series) < 1:
        raise ValueError("inner_join needs at least one series")
    cal = series[0].calendar
    if any(s.calendar != cal for s in series[1:]):
        raise CalendarMismatch("cannot join series on different calendars")
    start = max(s.start_date for s in series)
    end = min(s.end_date for s in series)
    if start > end:
        raise EmptyIntersection("series spans do not overlap")
    return SignalSet(s.between(start, end) for s in series)


# -- CSV helpers -----------------------------------------------------------


class _open_target:
    def __init__(self, target):
        self.target = target
        self.fh = None

    def __enter__(self):
        if isinstance(self.target, (str, os.PathLike)):
            self.fh = open(self.target, "w", encoding="utf-8", newline="")
            return self.fh
        return self.target

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


class _open_source(_open_target):
    def __enter__(self):
        if isinstance(self.target, (str, os.PathLike)):
            self.fh = open(self.target, encoding="utf-8", newline="")
            return self.fh
        return self.target


def _write_two_column(target, rows) -> None:
    with _open_target(target) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for d, v in rows:
            w.writerow([d.isoformat(), repr(float(v))])


def _read_two_column(source) -> list[tuple[dt.date, float]]:
    with _open_source(source) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["date", "value"]:
            raise ValueError("expected a 'date,value' header")
        return [(dt.date.fromisoformat(r[0]), float(r[1])) for r in reader if r]
