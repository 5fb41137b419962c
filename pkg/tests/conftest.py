from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from crudecast.series import DailySeries, TradingCalendar


@pytest.fixture
def cal() -> TradingCalendar:
    return TradingCalendar()


@pytest.fixture
def nyse_2015() -> TradingCalendar:
    return TradingCalendar(holidays=(dt.date(2015, 1, 1), dt.date(2015, 1, 19), dt.date(2015, 2, 16)))


def make_series(values, name="x", start=dt.date(2015, 1, 5), calendar=None) -> DailySeries:
    return DailySeries(name, calendar or TradingCalendar(), start, np.asarray(values, dtype=float))


# acceptance results, printed once per criterion at the end of the session
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
