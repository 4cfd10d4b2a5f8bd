"""Forecast evaluation and residual diagnostics.

RMSE per horizon over the post-burn-in record, the sample autocorrelation
function with a white-noise confidence band, and distribution summaries
(equal-width histogram plus normal QQ pairs).  All outputs have plot-ready
CSV emitters; nothing here renders plots.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from coldcast.errors import DegenerateSeriesError, EvaluationError, ParameterError
from coldcast.weather import HorizonMatrix


@dataclass(frozen=True)
class RmseCurve:
    horizons: np.ndarray
    rmse: np.ndarray
    counts: np.ndarray
    burn_in_hours: int


def rmse_per_horizon(residuals: HorizonMatrix,
                     burn_in_hours: int) -> RmseCurve:
    """Root mean square residual per horizon, issue times within the burn-in
    excluded; missing residuals are skipped, and the per-horizon counts say
    how many entered each mean."""
    if burn_in_hours < 0:
        raise ParameterError("burn_in_hours must be >= 0")
    cut = residuals.issue_hours[0] + burn_in_hours
    rows = residuals.issue_hours >= cut
    if not rows.any():
        raise EvaluationError("burn-in leaves no issue times to evaluate")
    vals = residuals.values[rows]
    k_max = residuals.k_max
    rmse = np.full(k_max, np.nan)
    counts = np.zeros(k_max, dtype=np.int64)
    for kk in range(k_max):
        col = vals[:, kk]
        ok = np.isfinite(col)
        m = int(ok.sum())
        counts[kk] = m
        if m:
            rmse[kk] = float(np.sqrt(np.mean(col[ok] ** 2)))
    if counts.sum() == 0:
        raise EvaluationError("no finite residuals after burn-in")
    return RmseCurve(np.arange(1, k_max + 1), rmse, counts, burn_in_hours)


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    rho: np.ndarray
    ci: float


def _finite_run(series) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    ok = np.isfinite(x)
    if not ok.any():
        raise DegenerateSeriesError("series has no finite values")
    i0 = int(np.argmax(ok))
    i1 = len(x) - int(np.argmax(ok[::-1]))
    x = x[i0:i1]
    if not np.isfinite(x).all():
        raise EvaluationError("series has interior missing values")
    return x


def acf(series, max_lag: int) -> AcfResult:
    """rho(h) = sum (x_t - m)(x_{t+h} - m) / sum (x_t - m)^2, h = 0..max_lag.

    Leading and trailing missing values are trimmed; the confidence
    half-width is the white-noise band 1.96/sqrt(n).
    """
    x = _finite_run(series)
    n = x.shape[0]
    if n <= max_lag:
        raise ParameterError(f"need length > {max_lag}, got {n}")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom <= 0.0:
        raise DegenerateSeriesError("zero-variance series has no ACF")
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    for h in range(1, max_lag + 1):
        rho[h] = float(xc[:-h] @ xc[h:]) / denom
    return AcfResult(np.arange(max_lag + 1), rho, 1.96 / np.sqrt(n))


# ---------------------------------------------------------------------------
# inverse standard normal CDF (rational approximation, ~1e-15 accurate)

_PPND_A = (3.3871328727963666080e0, 1.3314166789178437745e2,
           1.9715909503065514427e3, 1.3731693765509461125e4,
           4.5921953931549871457e4, 6.7265770927008700853e4,
           3.3430575583588128105e4, 2.5090809287301226727e3)
_PPND_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
           5.3941960214247511077e3, 2.1213794301586595867e4,
           3.9307895800092710610e4, 2.8729085735721942674e4,
           5.2264952788528545610e3)
_PPND_C = (1.42343711074968357734, 4.63033784615654529590,
           5.76949722146069140550, 3.64784832476320460504,
           1.27045825245236838258, 2.41780725177450611770e-1,
           2.27238449892691845833e-2, 7.74545014278341407640e-4)
_PPND_D = (1.0, 2.05319162663775882187, 1.67638483018380384940,
           6.89767334985100004550e-1, 1.48103976427480074590e-1,
           1.51986665636164571966e-2, 5.47593808499534494600e-4,
           1.05075007164441684324e-9)
_PPND_E = (6.65790464350110377720, 5.46378491116411436990,
           1.78482653991729133580, 2.96560571828504891230e-1,
           2.65321895265761230930e-2, 1.24266094738807843860e-3,
           2.71155556874348757815e-5, 2.01033439929228813265e-7)
_PPND_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
           1.48753612908506148525e-2, 7.86869131145613259100e-4,
           1.84631831751005468180e-5, 1.42151175831644588870e-7,
           2.04426310338993978564e-15)


def _poly(coeffs, r):
    s = np.zeros_like(r)
    for c in reversed(coeffs):
        s = s * r + c
    return s


def normal_ppf(p):
    """Quantile function of the standard normal for p in (0,1)."""
    p = np.asarray(p, dtype=np.float64)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ParameterError("probabilities must be strictly inside (0,1)")
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    r = 0.180625 - q[central] ** 2
    out[central] = q[central] * _poly(_PPND_A, r) / _poly(_PPND_B, r)

    tail = ~central
    if tail.any():
        qt = q[tail]
        rt = np.where(qt < 0.0, p[tail], 1.0 - p[tail])
        rt = np.sqrt(-np.log(rt))
        near = rt <= 5.0
        x = np.empty_like(rt)
        x[near] = _poly(_PPND_C, rt[near] - 1.6) / _poly(_PPND_D, rt[near] - 1.6)
        x[~near] = _poly(_PPND_E, rt[~near] - 5.0) / _poly(_PPND_F, rt[~near] - 5.0)
        out[tail] = np.where(qt < 0.0, -x, x)

    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class DistributionSummary:
    bin_edges: np.ndarray
    counts: np.ndarray
    qq_theoretical: np.ndarray
    qq_sample: np.ndarray


def distribution_summary(series, n_bins: int = 30) -> DistributionSummary:
    """Equal-width histogram over [min, max] plus normal QQ pairs.

    QQ pairs match the sorted standardized values against standard-normal
    quantiles at (i - 0.5)/n.
    """
    if n_bins < 1:
        raise ParameterError("n_bins must be >= 1")
    x = np.asarray(series, dtype=np.float64)
    x = x[np.isfinite(x)]
    n = x.shape[0]
    if n < 2:
        raise DegenerateSeriesError("need at least 2 finite values")
    sd = float(x.std(ddof=1))
    if sd <= 0.0:
        raise DegenerateSeriesError("constant series has no distribution shape")
    counts, edges = np.histogram(x, bins=n_bins, range=(x.min(), x.max()))
    z = np.sort((x - x.mean()) / sd)
    probs = (np.arange(1, n + 1) - 0.5) / n
    return DistributionSummary(edges, counts, normal_ppf(probs), z)


# ---------------------------------------------------------------------------
# CSV emitters

def write_rmse_csv(curve: RmseCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["horizon", "rmse", "count"])
        for i, k in enumerate(curve.horizons):
            cell = "" if np.isnan(curve.rmse[i]) else repr(float(curve.rmse[i]))
            w.writerow([int(k), cell, int(curve.counts[i])])


def write_acf_csv(result: AcfResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lag", "rho", "ci"])
        for i, lag in enumerate(result.lags):
            w.writerow([int(lag), repr(float(result.rho[i])),
                        repr(float(result.ci))])


def write_qq_csv(summary: DistributionSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theoretical", "sample"])
        for t, s in zip(summary.qq_theoretical, summary.qq_sample):
            w.writerow([repr(float(t)), repr(float(s))])


def write_hist_csv(summary: DistributionSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_left", "bin_right", "count"])
        for i, c in enumerate(summary.counts):
            w.writerow([repr(float(summary.bin_edges[i])),
                        repr(float(summary.bin_edges[i + 1])), int(c)])
