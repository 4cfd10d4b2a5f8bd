"""Model input bases: Fourier diurnal curves, a first-order low-pass filter,
and clamped B-spline bases.

The diurnal basis is split into workday and weekend blocks gated by the
calendar's workday indicator, so a single coefficient vector carries two
daily profiles.  The low-pass filter has unit stationary gain.  B-splines
are evaluated with the Cox-de Boor recursion and clamp out-of-range inputs
to the knot boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from coldcast import backend
from coldcast.errors import BasisError, ParameterError
from coldcast.series import CalendarContext


# ---------------------------------------------------------------------------
# diurnal Fourier basis

def diurnal_row(t, ctx: CalendarContext, n_har: int) -> np.ndarray:
    """Basis row [wd-sin_i, wd-cos_i, we-sin_i, we-cos_i], i = 1..n_har.

    Entries are sin/cos(t_tod * i * pi / 12) gated by the workday indicator
    of the timestamp; t is a datetime or an epoch hour.
    """
    if n_har < 1:
        raise ParameterError("n_har must be >= 1")
    from coldcast.series import to_epoch_hours
    h = t if isinstance(t, (int, np.integer)) else to_epoch_hours(t)
    return diurnal_matrix(np.array([int(h)], dtype=np.int64), ctx, n_har)[0]


def diurnal_matrix(hours: np.ndarray, ctx: CalendarContext,
                   n_har: int) -> np.ndarray:
    """Stack of diurnal_row values for an array of epoch hours."""
    if n_har < 1:
        raise ParameterError("n_har must be >= 1")
    hours = np.asarray(hours, dtype=np.int64)
    tod = ctx.tod_array(hours)
    wd = ctx.workday_array(hours).astype(np.float64)
    i = np.arange(1, n_har + 1, dtype=np.float64)
    ang = tod[:, None] * (i[None, :] * np.pi / 12.0)
    s = np.sin(ang)
    c = np.cos(ang)
    out = np.empty((hours.shape[0], 4 * n_har))
    out[:, 0:n_har] = s * wd[:, None]
    out[:, n_har:2 * n_har] = c * wd[:, None]
    out[:, 2 * n_har:3 * n_har] = s * (1.0 - wd)[:, None]
    out[:, 3 * n_har:4 * n_har] = c * (1.0 - wd)[:, None]
    return out


# ---------------------------------------------------------------------------
# first-order low-pass filter

class LowPassFilter:
    """y_t = a*y_{t-1} + (1-a)*x_t with a in [0,1); stationary gain 1.

    The instance keeps the last output as state so a series can be filtered
    in chunks; a fresh filter starts with first output = first input.
    """

    def __init__(self, a: float, state: Optional[float] = None):
        if not (0.0 <= a < 1.0):
            raise ParameterError(f"filter coefficient must be in [0,1), got {a}")
        self.a = float(a)
        self.state = None if state is None else float(state)

    def apply(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] == 0:
            raise ParameterError("input must be a nonempty 1-D sequence")
        has_state = self.state is not None
        y = backend.lowpass_scan(x, self.a, self.state if has_state else 0.0,
                                 has_state)
        self.state = float(y[-1])
        return y

    def reset(self) -> None:
        self.state = None


def lowpass_apply(filt: LowPassFilter, x: Sequence[float]) -> np.ndarray:
    """Apply the filter to a sequence, advancing its state."""
    return filt.apply(x)


# ---------------------------------------------------------------------------
# B-splines

@dataclass(frozen=True)
class SplineBasis:
    """Clamped B-spline basis: degree and full (clamped) knot vector."""

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        if self.degree < 1:
            raise BasisError("spline degree must be >= 1")
        knots = np.asarray(self.knots, dtype=np.float64)
        if np.any(np.diff(knots) < 0):
            raise BasisError("knots must be nondecreasing")
        if np.unique(knots).shape[0] < 2:
            raise BasisError("need at least 2 distinct knots")
        if knots.shape[0] < 2 * (self.degree + 1):
            raise BasisError(
                f"knot vector too short for degree {self.degree}"
            )
        object.__setattr__(self, "knots", knots)

    @classmethod
    def clamped(cls, lo: float, hi: float, interior: Sequence[float],
                degree: int = 3) -> "SplineBasis":
        """Build a clamped basis: boundary knots at multiplicity degree+1."""
        if not lo < hi:
            raise BasisError(f"need lo < hi, got [{lo}, {hi}]")
        interior = np.asarray(interior, dtype=np.float64)
        knots = np.concatenate([
            np.full(degree + 1, float(lo)),
            interior,
            np.full(degree + 1, float(hi)),
        ])
        return cls(degree, knots)

    @property
    def n_basis(self) -> int:
        return self.knots.shape[0] - self.degree - 1

    @property
    def lo(self) -> float:
        return float(self.knots[self.degree])

    @property
    def hi(self) -> float:
        return float(self.knots[self.n_basis])

    def _span(self, x: float) -> int:
        p = self.degree
        nb = self.n_basis
        span = int(np.searchsorted(self.knots, x, side="right")) - 1
        span = min(max(span, p), nb - 1)
        while span > p and self.knots[span] == self.knots[span + 1]:
            span -= 1
        return span

    def row(self, x: float) -> np.ndarray:
        """All basis function values at x (x clamped to the knot range)."""
        p = self.degree
        x = min(max(float(x), self.lo), self.hi)
        span = self._span(x)
        vals = np.zeros(p + 1)
        left = np.zeros(p + 1)
        right = np.zeros(p + 1)
        vals[0] = 1.0
        for j in range(1, p + 1):
            left[j] = x - self.knots[span + 1 - j]
            right[j] = self.knots[span + j] - x
            saved = 0.0
            for r in range(j):
                tmp = vals[r] / (right[r + 1] + left[j - r])
                vals[r] = saved + right[r + 1] * tmp
                saved = left[j - r] * tmp
            vals[j] = saved
        out = np.zeros(self.n_basis)
        out[span - p:span + 1] = vals
        return out

    def design(self, xs: np.ndarray) -> np.ndarray:
        """Design matrix of basis rows for many points (NaN rows for NaN x)."""
        xs = np.asarray(xs, dtype=np.float64)
        out = np.full((xs.shape[0], self.n_basis), np.nan)
        for i, x in enumerate(xs):
            if np.isfinite(x):
                out[i] = self.row(x)
        return out

    def curve(self, coeffs: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """Evaluate the fitted spline sum_j coeffs_j B_j at many points."""
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (self.n_basis,):
            raise BasisError(
                f"expected {self.n_basis} coefficients, got {coeffs.shape}"
            )
        return backend.spline_curve(self.knots, self.degree, coeffs,
                                    np.asarray(xs, dtype=np.float64))


def spline_row(basis: SplineBasis, x: float) -> np.ndarray:
    """All B-spline values at x via the Cox-de Boor recursion."""
    return basis.row(x)


def quantile_knots(data: Sequence[float], n_interior: int,
                   degree: int = 3) -> SplineBasis:
    """Clamped basis with interior knots at equally spaced data quantiles.

    Interior knot j sits at quantile j/(n_interior+1); boundaries at the data
    min and max.
    """
    data = np.asarray(data, dtype=np.float64)
    data = data[np.isfinite(data)]
    if data.shape[0] <= n_interior:
        raise BasisError(
            f"need more than {n_interior} samples, got {data.shape[0]}"
        )
    lo = float(data.min())
    hi = float(data.max())
    if not lo < hi:
        raise BasisError("degenerate data: all values equal")
    qs = np.arange(1, n_interior + 1, dtype=np.float64) / (n_interior + 1)
    interior = np.quantile(data, qs)
    return SplineBasis.clamped(lo, hi, interior, degree)
