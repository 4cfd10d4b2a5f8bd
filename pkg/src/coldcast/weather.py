"""Weather forecast handling.

Numerical weather forecasts arrive a few times per day, carry a completion
delay before they may be read, and cover a fixed range of lead hours.  This
module owns those availability semantics, the bias calibration of forecasts
against local observations (per-horizon local linear regression), and the
splicing of observations with forecasts into one combined input series.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from coldcast.errors import (
    AvailabilityError,
    CalibrationError,
    OrderingError,
    ParseError,
)
from coldcast.series import (
    HourlySeries,
    from_epoch_hours,
    parse_timestamp,
    to_epoch_hours,
)


@dataclass(frozen=True)
class NwpSchedule:
    """Forecast issue cadence and the delay before an issue is readable."""

    issues_per_day: int = 4
    completion_delay_hours: int = 4

    def __post_init__(self):
        if self.issues_per_day < 1 or 24 % self.issues_per_day != 0:
            raise ParseError(
                f"issues_per_day must divide 24, got {self.issues_per_day}"
            )
        if self.completion_delay_hours < 0:
            raise ParseError("completion_delay_hours must be >= 0")

    def availability(self, issue_hour: int) -> int:
        return int(issue_hour) + self.completion_delay_hours


@dataclass(frozen=True)
class HorizonMatrix:
    """Values indexed by (issue time, horizon 1..K).

    Rows are issue times (strictly increasing epoch hours); column k-1 holds
    the value for target time issue + k.
    """

    issue_hours: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        hours = np.asarray(self.issue_hours, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if hours.ndim != 1 or vals.ndim != 2 or vals.shape[0] != hours.shape[0]:
            raise ParseError("issue_hours and values shapes inconsistent")
        if vals.shape[1] < 1:
            raise ParseError("need at least one horizon column")
        if hours.shape[0] > 1 and np.any(np.diff(hours) <= 0):
            raise OrderingError("issue times must be strictly increasing")
        object.__setattr__(self, "issue_hours", hours)
        object.__setattr__(self, "values", vals)

    @property
    def n_issues(self) -> int:
        return self.issue_hours.shape[0]

    @property
    def k_max(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "HorizonMatrix":
        return HorizonMatrix(self.issue_hours, values)


def latest_available_forecast(matrix: HorizonMatrix, schedule: NwpSchedule,
                              t, k: int) -> float:
    """Value for target t+k from the most recent issue readable at t."""
    if k < 1:
        raise AvailabilityError(f"horizon must be >= 1, got {k}")
    th = t if isinstance(t, (int, np.integer)) else to_epoch_hours(t)
    th = int(th)
    avail = matrix.issue_hours + schedule.completion_delay_hours
    i = int(np.searchsorted(avail, th, side="right")) - 1
    if i < 0:
        raise AvailabilityError(
            f"no forecast issue available at {from_epoch_hours(th).isoformat()}"
        )
    issue = int(matrix.issue_hours[i])
    horizon = th + k - issue
    if horizon > matrix.k_max:
        raise AvailabilityError(
            f"latest issue at {from_epoch_hours(issue).isoformat()} covers "
            f"only {matrix.k_max} hours ahead; target is {horizon}"
        )
    return float(matrix.values[i, horizon - 1])


def combine_series(observed: HourlySeries, calibrated: HorizonMatrix,
                   schedule: NwpSchedule, t, k: int) -> np.ndarray:
    """Observations up to and including t, then forecasts for t+1 .. t+k."""
    th = t if isinstance(t, (int, np.integer)) else to_epoch_hours(t)
    i = observed.index_of(int(th))
    fc = [latest_available_forecast(calibrated, schedule, th, j)
          for j in range(1, k + 1)]
    return np.concatenate([observed.values[:i + 1], np.asarray(fc)])


def effective_matrix(matrix: HorizonMatrix, schedule: NwpSchedule,
                     start_hour: int, n: int, k_max: int) -> np.ndarray:
    """Hourly availability view: out[t, k-1] = forecast for start+t+k readable
    at start+t, NaN where no issue covers it."""
    out = np.full((n, k_max), np.nan)
    avail = matrix.issue_hours + schedule.completion_delay_hours
    for ti in range(n):
        th = start_hour + ti
        i = int(np.searchsorted(avail, th, side="right")) - 1
        if i < 0:
            continue
        issue = int(matrix.issue_hours[i])
        off = th - issue  # target t+k sits at raw column off+k-1
        hi = min(k_max, matrix.k_max - off)
        if hi >= 1:
            out[ti, :hi] = matrix.values[i, off:off + hi]
    return out


# ---------------------------------------------------------------------------
# calibration

def _loess_curve(x: np.ndarray, y: np.ndarray, span: float,
                 x_eval: np.ndarray) -> np.ndarray:
    """Local linear regression with tricube weights, evaluated pointwise.

    Bandwidth at each evaluation point is the distance to the
    ceil(span*n)-th nearest data point; evaluation points are clamped to the
    data range so the curve never extrapolates.
    """
    n = x.shape[0]
    r = max(2, int(math.ceil(span * n)))
    r = min(r, n)
    lo, hi = float(x.min()), float(x.max())
    out = np.empty(x_eval.shape[0])
    for i, x0 in enumerate(x_eval):
        x0 = min(max(float(x0), lo), hi)
        d = np.abs(x - x0)
        h = np.partition(d, r - 1)[r - 1]
        if h <= 0.0:
            out[i] = float(np.mean(y[d == 0.0]))
            continue
        u = d / h
        w = np.where(u < 1.0, (1.0 - u ** 3) ** 3, 0.0)
        sw = w.sum()
        xm = (w * x).sum() / sw
        ym = (w * y).sum() / sw
        dx = x - xm
        sxx = (w * dx * dx).sum()
        if sxx <= 1e-12 * max(1.0, xm * xm):
            out[i] = ym
        else:
            beta = (w * dx * (y - ym)).sum() / sxx
            out[i] = ym + beta * (x0 - xm)
    return out


def calibrate_nwp(matrix: HorizonMatrix, observed: HourlySeries,
                  span: float = 0.75,
                  min_pairs: int = 100) -> HorizonMatrix:
    """Map every forecast through a per-horizon bias-correction curve.

    For each horizon independently, a local linear regression of observed
    temperature on forecast temperature is fitted over all (forecast,
    observation) pairs, then applied to that horizon's column.
    """
    if not (0.0 < span <= 1.0):
        raise CalibrationError(f"span must be in (0,1], got {span}")
    obs0 = observed.start_hour
    out = matrix.values.copy()
    for k in range(1, matrix.k_max + 1):
        fc = matrix.values[:, k - 1]
        target = matrix.issue_hours + k
        idx = target - obs0
        inside = (idx >= 0) & (idx < observed.n)
        obs = np.full(fc.shape[0], np.nan)
        obs[inside] = observed.values[idx[inside]]
        pair = np.isfinite(fc) & np.isfinite(obs)
        m = int(pair.sum())
        if m < min_pairs:
            raise CalibrationError(
                f"horizon {k}: only {m} overlapping forecast/observation "
                f"pairs, need {min_pairs}"
            )
        x = fc[pair]
        y = obs[pair]
        apply_mask = np.isfinite(fc)
        out[apply_mask, k - 1] = _loess_curve(x, y, span, fc[apply_mask])
    return matrix.with_values(out)


# ---------------------------------------------------------------------------
# CSV format: issue_time, horizon, value

def write_horizon_csv(matrix: HorizonMatrix, path) -> None:
    """One row per (issue, horizon); missing values as empty cells."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["issue_time", "horizon", "value"])
        for i in range(matrix.n_issues):
            ts = from_epoch_hours(int(matrix.issue_hours[i])).isoformat()
            for k in range(1, matrix.k_max + 1):
                v = matrix.values[i, k - 1]
                cell = "" if np.isnan(v) else repr(float(v))
                w.writerow([ts, k, cell])


def read_horizon_csv(path) -> HorizonMatrix:
    """Read the long (issue_time, horizon, value) format."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        try:
            it = header.index("issue_time")
            ik = header.index("horizon")
            iv = header.index("value")
        except ValueError:
            raise ParseError(
                f"{path}: header must contain issue_time, horizon, value"
            ) from None
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            dt = parse_timestamp(row[it], row_no)
            try:
                k = int(row[ik])
            except ValueError:
                raise ParseError(
                    f"{path}: bad horizon {row[ik]!r} at row {row_no}"
                ) from None
            if k < 1:
                raise ParseError(f"{path}: horizon < 1 at row {row_no}")
            cell = row[iv].strip()
            v = np.nan if cell == "" else float(cell)
            rows.append((to_epoch_hours(dt), k, v))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    issues = sorted({r[0] for r in rows})
    k_max = max(r[1] for r in rows)
    pos = {h: i for i, h in enumerate(issues)}
    vals = np.full((len(issues), k_max), np.nan)
    seen = set()
    for h, k, v in rows:
        if (h, k) in seen:
            raise ParseError(
                f"{path}: duplicate (issue, horizon) = "
                f"({from_epoch_hours(h).isoformat()}, {k})"
            )
        seen.add((h, k))
        vals[pos[h], k - 1] = v
    return HorizonMatrix(np.asarray(issues, dtype=np.int64), vals)
