"""Series and panel containers, splitting, alignment, pruning and CSV ingestion."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DataError,
    DuplicateSeriesId,
    EmptyPanel,
    FrequencyMismatch,
    NonFiniteValue,
    ParseError,
    SplitTooSmall,
)

FREQUENCIES = ("annual", "quarterly", "monthly", "daily")

# months between consecutive observations
_MONTH_STEP = {"annual": 12, "quarterly": 3, "monthly": 1}
# business-day data may skip weekends and holidays
_MAX_DAILY_GAP = 5


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Series:
    """A univariate series with strictly ordered, finite values.

    ``start`` is the integer period index of the first observation
    (see :func:`period_index`).
    """

    id: str
    values: np.ndarray
    frequency: str = "annual"
    start: int = 0

    def __post_init__(self):
        if self.frequency not in FREQUENCIES:
            raise DataError(f"unknown frequency {self.frequency!r}")
        values = _frozen_array(self.values)
        if values.size == 0:
            raise DataError(f"series {self.id!r} is empty")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NonFiniteValue(f"series {self.id!r} has a non-finite value at position {bad}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start", int(self.start))

    def __len__(self) -> int:
        return int(self.values.size)

    def __repr__(self) -> str:
        return f"Series(id={self.id!r}, frequency={self.frequency!r}, start={self.start}, n={len(self)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return (
            self.id == other.id
            and self.frequency == other.frequency
            and self.start == other.start
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def replace_values(self, values, start: int | None = None) -> "Series":
        return Series(self.id, values, self.frequency, self.start if start is None else start)

    def extend(self, values: Iterable[float]) -> "Series":
        """Return a new series with ``values`` appended."""
        return self.replace_values(np.concatenate([self.values, np.asarray(list(values), dtype=float)]))

    def tail(self, n: int) -> "Series":
        """Most recent ``n`` observations, start index shifted accordingly."""
        if n > len(self):
            raise DataError(f"cannot take {n} observations from series of length {len(self)}")
        return self.replace_values(self.values[len(self) - n:], self.start + len(self) - n)


@dataclass(frozen=True, eq=False)
class Panel:
    """Equal-length series sharing one frequency."""

    series: tuple
    frequency: str
    length: int = field(init=False)

    def __post_init__(self):
        members = tuple(self.series)
        if not members:
            raise EmptyPanel("panel has no series")
        ids = [s.id for s in members]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateSeriesId(f"duplicate series ids {dup}")
        for s in members:
            if s.frequency != self.frequency:
                raise DataError(f"series {s.id!r} has frequency {s.frequency}, panel is {self.frequency}")
        lengths = {len(s) for s in members}
        if len(lengths) != 1:
            raise DataError(f"panel series have unequal lengths {sorted(lengths)}")
        object.__setattr__(self, "series", members)
        object.__setattr__(self, "length", lengths.pop())

    def __len__(self) -> int:
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    @property
    def ids(self) -> list:
        return [s.id for s in self.series]

    def get(self, series_id: str) -> Series:
        for s in self.series:
            if s.id == series_id:
                return s
        raise KeyError(series_id)

    def subset(self, keep: Iterable[str]) -> "Panel":
        keep = set(keep)
        return Panel(tuple(s for s in self.series if s.id in keep), self.frequency)

    def split_holdout(self, test_size: int) -> tuple["Panel", "Panel"]:
        """Split every series into a history panel and a trailing panel of ``test_size`` points."""
        if not 1 <= test_size <= self.length - 2:
            raise SplitTooSmall(f"test size {test_size} invalid for panel length {self.length}")
        cut = self.length - test_size
        history = tuple(s.replace_values(s.values[:cut]) for s in self.series)
        future = tuple(s.replace_values(s.values[cut:], s.start + cut) for s in self.series)
        return Panel(history, self.frequency), Panel(future, self.frequency)

    def fingerprint(self) -> str:
        """Content hash over ids, frequency, start indices and raw float bytes."""
        h = hashlib.sha256()
        h.update(self.frequency.encode())
        for s in sorted(self.series, key=lambda s: s.id):
            h.update(s.id.encode())
            h.update(str(s.start).encode())
            h.update(np.ascontiguousarray(s.values, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")

    def train_length(self, n: int) -> int:
        # guard against 0.7 * 10 == 6.999...
        return int(math.floor(self.train_fraction * n + 1e-9))


def split_train_test(series: Series, spec: SplitSpec = SplitSpec()) -> tuple[Series, Series]:
    """Chronological split: train is the first ``floor(fraction * N)`` points."""
    n = len(series)
    n_train = spec.train_length(n)
    if n_train < 2 or n - n_train < 1:
        raise SplitTooSmall(
            f"series {series.id!r} of length {n} gives train={n_train}, test={n - n_train}"
        )
    train = series.replace_values(series.values[:n_train])
    test = series.replace_values(series.values[n_train:], series.start + n_train)
    return train, test


def alignment_cutoff(lengths: Sequence[int]) -> int:
    """Length L maximizing ``L * #{len >= L}`` over the observed lengths; ties go to larger L."""
    if not lengths:
        raise EmptyPanel("no series to align")
    ordered = sorted(lengths, reverse=True)
    best_l, best_total = 0, -1
    # walking lengths in descending order, ``k + 1`` series have len >= ordered[k]
    for k, length in enumerate(ordered):
        if k + 1 < len(ordered) and ordered[k + 1] == length:
            continue
        total = length * (k + 1)
        if total > best_total:
            best_l, best_total = length, total
    return best_l


def align_panel(raw: Iterable[Series]) -> tuple[Panel, int, set]:
    """Trim series to a common length chosen to maximize the retained data points.

    Series shorter than the cutoff are dropped; the rest keep their most
    recent ``cutoff`` observations.

    Returns
    -------
    panel, cutoff, dropped ids
    """
    raw = list(raw)
    if not raw:
        raise EmptyPanel("no series to align")
    freqs = {s.frequency for s in raw}
    if len(freqs) != 1:
        raise DataError(f"mixed frequencies {sorted(freqs)}")
    for s in raw:
        if len(s) < 2:
            raise DataError(f"series {s.id!r} has fewer than 2 observations")
    cutoff = alignment_cutoff([len(s) for s in raw])
    kept = tuple(s.tail(cutoff) for s in raw if len(s) >= cutoff)
    dropped = {s.id for s in raw if len(s) < cutoff}
    if not kept:
        raise EmptyPanel("alignment dropped every series")
    return Panel(kept, freqs.pop()), cutoff, dropped


def prune_irregular(
    panel: Panel, fit_errors: Mapping[str, float], ratio_threshold: float = 10.0
) -> tuple[Panel, set]:
    """Drop series whose fit error exceeds ``ratio_threshold`` times the panel median."""
    missing = set(panel.ids) - set(fit_errors)
    if missing:
        raise DataError(f"fit errors missing for {sorted(missing)}")
    errs = {sid: float(fit_errors[sid]) for sid in panel.ids}
    if any(e < 0 or not math.isfinite(e) for e in errs.values()):
        raise DataError("fit errors must be finite and nonnegative")
    bound = ratio_threshold * median(errs.values())
    dropped = {sid for sid, e in errs.items() if e > bound}
    if len(dropped) == len(panel):
        raise EmptyPanel("pruning dropped every series")
    return panel.subset(set(panel.ids) - dropped), dropped


# ---------------------------------------------------------------------------
# dates

def parse_date(text: str) -> dt.date:
    """ISO-8601 date; ``YYYY`` and ``YYYY-MM`` are accepted as the first day of the period."""
    text = text.strip()
    try:
        if len(text) == 4 and text.isdigit():
            return dt.date(int(text), 1, 1)
        if len(text) == 7 and text[4] == "-":
            return dt.date(int(text[:4]), int(text[5:]), 1)
        return dt.date.fromisoformat(text[:10])
    except ValueError as exc:
        raise ValueError(f"not an ISO-8601 date: {text!r}") from exc


def period_index(date: dt.date, frequency: str) -> int:
    if frequency == "annual":
        return date.year
    if frequency == "quarterly":
        return date.year * 4 + (date.month - 1) // 3
    if frequency == "monthly":
        return date.year * 12 + date.month - 1
    return date.toordinal()


def check_spacing(dates: Sequence[dt.date], frequency: str, where: str = "") -> None:
    """Raise FrequencyMismatch unless consecutive dates are one period apart."""
    for k in range(1, len(dates)):
        a, b = dates[k - 1], dates[k]
        if frequency == "daily":
            gap = (b - a).days
            ok = 1 <= gap <= _MAX_DAILY_GAP
        else:
            gap = (b.year - a.year) * 12 + (b.month - a.month)
            ok = gap == _MONTH_STEP[frequency]
        if not ok:
            raise FrequencyMismatch(
                f"{where}dates {a.isoformat()} -> {b.isoformat()} are not one {frequency} period apart"
            )


# ---------------------------------------------------------------------------
# CSV ingestion

@dataclass(frozen=True)
class CsvSchema:
    layout: str = "wide"  # "wide" or "long"
    frequency: str = "annual"
    date_column: str = "date"

    def __post_init__(self):
        if self.layout not in ("wide", "long"):
            raise DataError(f"layout must be 'wide' or 'long', got {self.layout!r}")
        if self.frequency not in FREQUENCIES:
            raise DataError(f"unknown frequency {self.frequency!r}")


def _parse_value(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"cannot parse {cell!r} as a number", row, column) from None
    if not math.isfinite(value):
        raise NonFiniteValue(f"non-finite value {cell!r} at row {row}, column {column!r}")
    return value


def _read_rows(path: Path) -> tuple[list, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        rows = [r for r in reader if any(c.strip() for c in r)]
    return header, rows


def _load_wide(path: Path, schema: CsvSchema) -> list:
    header, rows = _read_rows(path)
    if schema.date_column not in header:
        raise ParseError(f"missing {schema.date_column!r} column", 1)
    date_col = header.index(schema.date_column)
    ids = [h for k, h in enumerate(header) if k != date_col]
    if len(set(ids)) != len(ids):
        raise DuplicateSeriesId(f"duplicate column names in {path}")
    dates = []
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", r)
        try:
            dates.append(parse_date(row[date_col]))
        except ValueError as exc:
            raise ParseError(str(exc), r, schema.date_column) from None
    check_spacing(dates, schema.frequency)

    out = []
    for k, sid in enumerate(header):
        if k == date_col:
            continue
        cells = [row[k].strip() for row in rows]
        present = [i for i, c in enumerate(cells) if c != ""]
        if not present:
            raise ParseError(f"series {sid!r} has no values", column=sid)
        first, last = present[0], present[-1]
        values = []
        for i in range(first, last + 1):
            if cells[i] == "":
                raise ParseError("empty interior cell", i + 2, sid)
            values.append(_parse_value(cells[i], i + 2, sid))
        out.append(Series(sid, values, schema.frequency, period_index(dates[first], schema.frequency)))
    return out


def _load_long(path: Path, schema: CsvSchema) -> list:
    header, rows = _read_rows(path)
    needed = (schema.date_column, "id", "value")
    for name in needed:
        if name not in header:
            raise ParseError(f"missing {name!r} column", 1)
    di, ii, vi = (header.index(n) for n in needed)
    groups: dict = OrderedDict()
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", r)
        sid = row[ii].strip()
        if not sid:
            raise ParseError("empty series id", r, "id")
        try:
            date = parse_date(row[di])
        except ValueError as exc:
            raise ParseError(str(exc), r, schema.date_column) from None
        if row[vi].strip() == "":
            raise ParseError("empty value cell", r, "value")
        value = _parse_value(row[vi], r, "value")
        entries = groups.setdefault(sid, {})
        if date in entries:
            raise DuplicateSeriesId(f"series {sid!r} has two rows for {date.isoformat()} (row {r})")
        entries[date] = value
    out = []
    for sid, entries in groups.items():
        dates = sorted(entries)
        check_spacing(dates, schema.frequency, where=f"series {sid!r}: ")
        out.append(
            Series(sid, [entries[d] for d in dates], schema.frequency, period_index(dates[0], schema.frequency))
        )
    return out


def load_panel_csv(path, schema: CsvSchema = CsvSchema()) -> list:
    """Read a wide (``date,<id>,...``) or long (``date,id,value``) CSV into series.

    Wide files may have leading or trailing blanks per column (series of
    different spans); blanks between observed values are rejected.
    """
    path = Path(path)
    if schema.layout == "wide":
        return _load_wide(path, schema)
    return _load_long(path, schema)


def write_panel_csv(path, series: Sequence[Series]) -> None:
    """Write equal-frequency series to a wide CSV keyed by period-start dates."""
    if not series:
        raise EmptyPanel("nothing to write")
    freq = series[0].frequency
    lo = min(s.start for s in series)
    hi = max(s.start + len(s) for s in series)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + [s.id for s in series])
        for p in range(lo, hi):
            row = [period_date(p, freq).isoformat()]
            for s in series:
                k = p - s.start
                row.append(repr(float(s.values[k])) if 0 <= k < len(s) else "")
            w.writerow(row)


def period_date(index: int, frequency: str) -> dt.date:
    """Inverse of :func:`period_index` (first day of the period).

    Daily indices are calendar-day ordinals.
    """
    if frequency == "annual":
        return dt.date(index, 1, 1)
    if frequency == "quarterly":
        return dt.date(index // 4, (index % 4) * 3 + 1, 1)
    if frequency == "monthly":
        return dt.date(index // 12, index % 12 + 1, 1)
    return dt.date.fromordinal(index)


def panel_metadata(panel: Panel, cutoff: int, dropped: Mapping[str, str], source=None) -> dict:
    """Metadata echo: cutoff, dropped ids with reasons and final dimensions."""
    return {
        "source": None if source is None else str(source),
        "frequency": panel.frequency,
        "cutoff": int(cutoff),
        "dropped": {k: dropped[k] for k in sorted(dropped)},
        "n_series": len(panel),
        "length": panel.length,
        "series": panel.ids,
        "fingerprint": panel.fingerprint(),
    }


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
