"""JSON and CSV helpers shared by the report types."""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence
from fractions import Fraction

from .strat_tree import format_rational


def json_value(x: object) -> object:
    """Exact rationals become ``"p/q"`` strings; everything else passes through."""
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, tuple):
        return [json_value(v) for v in x]
    return x


def csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([json_value(v) for v in row])
    return buf.getvalue()
