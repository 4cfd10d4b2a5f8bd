"""Hourly time-series containers, calendar logic, gap repair, and CSV IO.

Everything downstream (weather splicing, basis construction, forecasting)
works on :class:`HourlySeries` values and integer epoch hours.  Timestamps
are stored internally as UTC; local time enters only through
:class:`CalendarContext`, which carries the UTC offset and the workday rule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from coldcast.errors import (
    DuplicateHourError,
    GapRepairError,
    OrderingError,
    ParseError,
)

HOUR = timedelta(hours=1)
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def parse_timestamp(text: str, row: Optional[int] = None) -> datetime:
    """Parse an ISO-8601 timestamp into an on-the-hour UTC datetime.

    Naive timestamps are taken as UTC.  Offsets are converted to UTC, which
    must land on a whole hour.
    """
    where = "" if row is None else f" at row {row}"
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(s)
    except ValueError as exc:
        raise ParseError(f"malformed timestamp {text!r}{where}: {exc}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    else:
        dt = dt.astimezone(timezone.utc)
    if dt.minute or dt.second or dt.microsecond:
        raise ParseError(f"timestamp {text!r}{where} is not on the hour (UTC)")
    return dt


def to_epoch_hours(dt: datetime) -> int:
    """Hours since 1970-01-01T00:00Z for an on-the-hour aware datetime."""
    if dt.tzinfo is None:
        raise ParseError(f"naive datetime {dt!r}; timezone required")
    delta = dt.astimezone(timezone.utc) - _EPOCH
    seconds = delta.days * 86400 + delta.seconds
    if seconds % 3600:
        raise ParseError(f"datetime {dt!r} is not on the hour")
    return seconds // 3600


def from_epoch_hours(h: int) -> datetime:
    """Inverse of :func:`to_epoch_hours`."""
    return _EPOCH + timedelta(hours=int(h))


def _default_workday(d: date) -> bool:
    return d.weekday() < 5


@dataclass(frozen=True)
class CalendarContext:
    """Local-time rules: UTC offset in whole hours and the workday predicate.

    The predicate takes a local calendar date and must be pure.  The default
    marks Monday through Friday as workdays.
    """

    utc_offset_hours: int = 0
    workday_predicate: Callable[[date], bool] = field(default=_default_workday)

    def time_of_day(self, epoch_hour: int) -> float:
        return float((int(epoch_hour) + self.utc_offset_hours) % 24)

    def local_date(self, epoch_hour: int) -> date:
        local = int(epoch_hour) + self.utc_offset_hours
        return (_EPOCH + timedelta(hours=local)).date()

    def is_workday(self, epoch_hour: int) -> bool:
        return bool(self.workday_predicate(self.local_date(epoch_hour)))

    def tod_array(self, hours: np.ndarray) -> np.ndarray:
        return ((hours.astype(np.int64) + self.utc_offset_hours) % 24).astype(
            np.float64
        )

    def workday_array(self, hours: np.ndarray) -> np.ndarray:
        local_days = (hours.astype(np.int64) + self.utc_offset_hours) // 24
        if self.workday_predicate is _default_workday:
            # 1970-01-01 was a Thursday: weekday index (day + 3) mod 7, 0=Mon
            return ((local_days + 3) % 7) < 5
        out = np.empty(hours.shape[0], dtype=bool)
        for i, d in enumerate(local_days):
            out[i] = bool(
                self.workday_predicate((_EPOCH + timedelta(days=int(d))).date())
            )
        return out


def time_of_day(t, ctx: CalendarContext) -> float:
    """Hour of day in [0, 24) local time; t is a datetime or an epoch hour."""
    h = t if isinstance(t, (int, np.integer)) else to_epoch_hours(t)
    return ctx.time_of_day(h)


@dataclass(frozen=True)
class HourlySeries:
    """A uniformly hourly-sampled scalar series with gap provenance flags.

    gap_mask marks samples that were originally missing; repairs fill the
    values but never clear the flag.
    """

    start: datetime
    values: np.ndarray
    gap_mask: np.ndarray = None
    units: str = ""

    def __post_init__(self):
        if self.start.tzinfo is None:
            raise ParseError("series start must be timezone-aware")
        start = self.start.astimezone(timezone.utc)
        if start.minute or start.second or start.microsecond:
            raise ParseError("series start must be on the hour")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.shape[0] < 1:
            raise ParseError("values must be a nonempty 1-D sequence")
        mask = self.gap_mask
        if mask is None:
            mask = np.zeros(vals.shape[0], dtype=bool)
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != vals.shape:
                raise ParseError("gap_mask length must match values")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "gap_mask", mask)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def start_hour(self) -> int:
        return to_epoch_hours(self.start)

    @property
    def end_hour(self) -> int:
        return self.start_hour + self.n - 1

    def hours(self) -> np.ndarray:
        return self.start_hour + np.arange(self.n, dtype=np.int64)

    def timestamp(self, i: int) -> datetime:
        return from_epoch_hours(self.start_hour + i)

    def index_of(self, epoch_hour: int) -> int:
        i = int(epoch_hour) - self.start_hour
        if i < 0 or i >= self.n:
            raise IndexError(f"hour {epoch_hour} outside series range")
        return i

    def with_values(self, values: np.ndarray,
                    gap_mask: Optional[np.ndarray] = None) -> "HourlySeries":
        return HourlySeries(self.start, values,
                            self.gap_mask if gap_mask is None else gap_mask,
                            self.units)


def ingest_csv(path, time_col: str = "time", value_col: str = "value",
               repaired_col: str = "repaired", units: str = "") -> HourlySeries:
    """Read an hourly CSV into an HourlySeries.

    Required columns: time (ISO-8601) and value (decimal point, empty cell =
    missing).  Absent hourly slots between rows are inserted as gaps.  A
    boolean repaired column, when present, restores gap flags written by
    :func:`write_csv`.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        try:
            it = header.index(time_col)
            iv = header.index(value_col)
        except ValueError:
            raise ParseError(
                f"{path}: header must contain columns "
                f"{time_col!r} and {value_col!r}, got {header}"
            ) from None
        ir = header.index(repaired_col) if repaired_col in header else -1

        hours = []
        vals = []
        flags = []
        prev = None
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) <= max(it, iv):
                raise ParseError(f"{path}: row {row_no} has too few columns")
            dt = parse_timestamp(row[it], row_no)
            h = to_epoch_hours(dt)
            if prev is not None:
                if h == prev:
                    raise DuplicateHourError(
                        f"{path}: duplicate hour {row[it].strip()} at row {row_no}"
                    )
                if h < prev:
                    raise OrderingError(
                        f"{path}: timestamps not increasing at row {row_no}"
                    )
            prev = h
            cell = row[iv].strip()
            if cell == "":
                v = np.nan
                gap = True
            else:
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: bad value {cell!r} at row {row_no}"
                    ) from None
                gap = False
            if ir >= 0 and len(row) > ir:
                rcell = row[ir].strip().lower()
                if rcell in ("true", "1"):
                    gap = True
            hours.append(h)
            vals.append(v)
            flags.append(gap)

    if not hours:
        raise ParseError(f"{path}: no data rows")

    h0 = hours[0]
    n = hours[-1] - h0 + 1
    values = np.full(n, np.nan)
    mask = np.ones(n, dtype=bool)
    idx = np.asarray(hours, dtype=np.int64) - h0
    values[idx] = vals
    mask[idx] = flags
    return HourlySeries(from_epoch_hours(h0), values, mask, units)


def write_csv(series: HourlySeries, path, time_col: str = "time",
              value_col: str = "value", repaired_col: str = "repaired") -> None:
    """Write a series in the ingest format plus a repaired flag column.

    Values use shortest round-trip decimal form so a read-back is bit-exact;
    missing values are written as empty cells.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([time_col, value_col, repaired_col])
        h0 = series.start_hour
        for i in range(series.n):
            v = series.values[i]
            cell = "" if np.isnan(v) else repr(float(v))
            w.writerow([
                from_epoch_hours(h0 + i).isoformat(),
                cell,
                "true" if series.gap_mask[i] else "false",
            ])


def _gap_runs(isnan: np.ndarray):
    runs = []
    i = 0
    n = isnan.shape[0]
    while i < n:
        if isnan[i]:
            j = i
            while j < n and isnan[j]:
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1
    return runs


def repair_gaps(series: HourlySeries,
                long_gap_threshold_hours: int = 24) -> HourlySeries:
    """Fill missing samples from analogous earlier hours.

    Runs of missing values strictly longer than the threshold are filled from
    the same hour one week earlier (t-168); shorter runs from the day before
    (t-24).  Repairs run chronologically, so an earlier repair may serve as
    the source for a later one.  Gap flags are kept.
    """
    if long_gap_threshold_hours <= 0:
        raise GapRepairError("long_gap_threshold_hours must be positive")
    vals = series.values.copy()
    isnan = np.isnan(vals)
    if not isnan.any():
        return series
    mask = series.gap_mask | isnan
    for i0, i1 in _gap_runs(isnan):
        length = i1 - i0
        src = 168 if length > long_gap_threshold_hours else 24
        for i in range(i0, i1):
            j = i - src
            if j < 0 or np.isnan(vals[j]):
                t0 = series.timestamp(i0).isoformat()
                t1 = series.timestamp(i1 - 1).isoformat()
                raise GapRepairError(
                    f"unrepairable gap {t0} .. {t1}: source sample "
                    f"{src} h earlier is missing"
                )
            vals[i] = vals[j]
    return HourlySeries(series.start, vals, mask, series.units)
