"""Plain-text and CSV table rendering shared by the screening and model reports."""

from __future__ import annotations

import csv
import math
import os
from typing import Sequence


def fmt_num(value: float, digits: int = 3) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if value != 0 and (abs(value) < 10 ** -digits or abs(value) >= 1e7):
        return f"{value:.2E}"
    return f"{value:.{digits}f}"


def star(value: float, significant: bool, digits: int = 3) -> str:
    text = fmt_num(value, digits)
    return f"{text}*" if text and significant else text


def text_table(header: Sequence[str], rows: Sequence[Sequence[str]], footer: str = "") -> str:
    """Left-align the first column, right-align the rest."""
    cols = len(header)
    widths = [len(h) for h in header]
    for row in rows:
        for j in range(cols):
            widths[j] = max(widths[j], len(row[j]))

    def line(cells):
        parts = [cells[0].ljust(widths[0])]
        parts += [cells[j].rjust(widths[j]) for j in range(1, cols)]
        return "  ".join(parts).rstrip()

    rule = "-" * (sum(widths) + 2 * (cols - 1))
    out = [line(header), rule, *(line(r) for r in rows), rule]
    if footer:
        out.append(footer)
    return "\n".join(out) + "\n"


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


def write_text(path: str | os.PathLike, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
