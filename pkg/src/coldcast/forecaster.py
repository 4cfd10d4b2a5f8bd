"""The three forecast models and their supporting pieces.

Model kinds, all sharing the adaptive diurnal curve and a low-pass-filtered
ambient temperature input, one independent estimator per horizon:

* fix_lin    -- regime indicator from a fixed daily opening window.
* var_lin    -- regime predicted by the sign of an adaptively fitted diurnal
                mean curve.
* var_nonlin -- var_lin plus an offline first stage that replaces the
                temperature input with per-regime fitted spline transforms.

Also here: the offline spline stage fit, a reference regime predictor, and
the AR noise model applied to one-step residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from coldcast import backend
from coldcast.basis import SplineBasis, diurnal_matrix, diurnal_row, quantile_knots
from coldcast.errors import (
    ConditioningError,
    ConfigurationError,
    FitError,
    ParameterError,
    ParseError,
)
from coldcast.rls import DELTA, RlsState
from coldcast.series import CalendarContext, HourlySeries, to_epoch_hours
from coldcast.weather import HorizonMatrix, NwpSchedule, effective_matrix

KINDS = ("fix_lin", "var_lin", "var_nonlin")

SPLINE_MAGIC = "SPL1"


@dataclass
class ModelConfig:
    """Everything run_forecast needs besides the data itself.

    lambdas and a_ta may be given as scalars (applied to all horizons) or as
    length-k_max arrays.
    """

    kind: str = "var_lin"
    n_har: int = 10
    k_max: int = 42
    lambdas: object = 0.998
    a_ta: object = 0.6
    open_hour: int = 8
    close_hour: int = 21
    burn_in_hours: int = 336

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(
                f"kind must be one of {KINDS}, got {self.kind!r}"
            )
        if self.n_har < 1:
            raise ConfigurationError("n_har must be >= 1")
        if self.k_max < 1:
            raise ConfigurationError("k_max must be >= 1")
        if not (0 <= self.open_hour < self.close_hour < 24):
            raise ConfigurationError(
                f"need 0 <= open_hour < close_hour < 24, got "
                f"[{self.open_hour}, {self.close_hour}]"
            )
        if self.burn_in_hours < 0:
            raise ConfigurationError("burn_in_hours must be >= 0")
        self.lambdas = self._per_horizon(self.lambdas, "lambdas")
        self.a_ta = self._per_horizon(self.a_ta, "a_ta")
        if np.any(self.lambdas <= 0.5) or np.any(self.lambdas > 1.0):
            raise ConfigurationError("lambda entries must be in (0.5, 1]")
        if np.any(self.a_ta < 0.0) or np.any(self.a_ta >= 1.0):
            raise ConfigurationError("a_ta entries must be in [0, 1)")

    def _per_horizon(self, val, name) -> np.ndarray:
        arr = np.asarray(val, dtype=np.float64)
        if arr.ndim == 0:
            return np.full(self.k_max, float(arr))
        if arr.shape != (self.k_max,):
            raise ConfigurationError(
                f"{name} must be scalar or length {self.k_max}, "
                f"got shape {arr.shape}"
            )
        return arr.copy()

    @property
    def dim(self) -> int:
        return 4 * self.n_har + 4


def fixed_regime_indicator(t_plus_k, config: ModelConfig,
                           ctx: CalendarContext) -> int:
    """1 when the whole hour falls inside the fixed opening window."""
    h = (t_plus_k if isinstance(t_plus_k, (int, np.integer))
         else to_epoch_hours(t_plus_k))
    tod = int(ctx.time_of_day(int(h)))
    return 1 if config.open_hour <= tod <= config.close_hour else 0


# ---------------------------------------------------------------------------
# offline spline first stage

@dataclass(frozen=True)
class SplineStage:
    """Per-regime spline transforms of filtered temperature, fitted offline."""

    open_basis: SplineBasis
    open_coeffs: np.ndarray
    close_basis: SplineBasis
    close_coeffs: np.ndarray
    n_open: int = 0
    n_close: int = 0

    def s_open(self, x) -> np.ndarray:
        return self.open_basis.curve(self.open_coeffs,
                                     np.asarray(x, dtype=np.float64))

    def s_close(self, x) -> np.ndarray:
        return self.close_basis.curve(self.close_coeffs,
                                      np.asarray(x, dtype=np.float64))


def fit_spline_stage(load, filtered_temp, regimes, degree: int = 3,
                     n_interior: int = 5, min_samples: int = 50,
                     fit_hours: Optional[int] = None) -> SplineStage:
    """Least-squares spline regression of load on filtered temperature,
    fitted separately for the open (regime 1) and closed (regime 0) hours.

    fit_hours, when given, restricts the fit to the first fit_hours samples
    (a leading training split) instead of the whole record.
    """
    y = load.values if isinstance(load, HourlySeries) else np.asarray(load, float)
    x = (filtered_temp.values if isinstance(filtered_temp, HourlySeries)
         else np.asarray(filtered_temp, float))
    r = np.asarray(regimes)
    if not (y.shape == x.shape == r.shape):
        raise ParameterError("load, filtered_temp, regimes must be co-registered")
    if degree < 1 or n_interior < 1:
        raise ParameterError("degree and n_interior must be >= 1")
    if fit_hours is not None:
        y, x, r = y[:fit_hours], x[:fit_hours], r[:fit_hours]

    fitted = {}
    counts = {}
    for regime, name in ((1, "open"), (0, "close")):
        sel = (r == regime) & np.isfinite(x) & np.isfinite(y)
        m = int(sel.sum())
        if m < min_samples:
            raise FitError(
                f"{name} regime has {m} samples, need {min_samples}"
            )
        xs, ys = x[sel], y[sel]
        basis = quantile_knots(xs, n_interior, degree)
        X = basis.design(xs)
        coeffs, _, rank, _ = np.linalg.lstsq(X, ys, rcond=None)
        if rank < basis.n_basis:
            raise FitError(
                f"{name} regime design is rank-deficient "
                f"({rank} < {basis.n_basis}); an interior knot span is empty"
            )
        fitted[name] = (basis, coeffs)
        counts[name] = m
    return SplineStage(fitted["open"][0], fitted["open"][1],
                       fitted["close"][0], fitted["close"][1],
                       counts["open"], counts["close"])


def save_spline_stage(stage: SplineStage, path) -> None:
    """Versioned text dump: per regime the degree, knots, and coefficients."""
    with open(path, "w") as fh:
        fh.write(SPLINE_MAGIC + "\n")
        for name, basis, coeffs, m in (
            ("open", stage.open_basis, stage.open_coeffs, stage.n_open),
            ("close", stage.close_basis, stage.close_coeffs, stage.n_close),
        ):
            fh.write(f"{name} {basis.degree} {m}\n")
            fh.write(" ".join(repr(float(v)) for v in basis.knots) + "\n")
            fh.write(" ".join(repr(float(v)) for v in coeffs) + "\n")


def load_spline_stage(path) -> SplineStage:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != SPLINE_MAGIC:
        raise ParseError(f"{path}: missing {SPLINE_MAGIC} header")
    parts = {}
    i = 1
    try:
        for _ in range(2):
            name, degree, m = lines[i].split()
            knots = np.array([float(v) for v in lines[i + 1].split()])
            coeffs = np.array([float(v) for v in lines[i + 2].split()])
            parts[name] = (SplineBasis(int(degree), knots), coeffs, int(m))
            i += 3
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed spline stage: {exc}") from None
    if set(parts) != {"open", "close"}:
        raise ParseError(f"{path}: need one open and one close block")
    for name in parts:
        basis, coeffs, _ = parts[name]
        if coeffs.shape != (basis.n_basis,):
            raise ParseError(f"{path}: {name} coefficient count mismatch")
    return SplineStage(parts["open"][0], parts["open"][1],
                       parts["close"][0], parts["close"][1],
                       parts["open"][2], parts["close"][2])


# ---------------------------------------------------------------------------
# regime predictor (reference implementation; run_forecast fuses the same
# recursion into its per-horizon sweep)

class RegimePredictor:
    """Adaptive regime model: a diurnal curve plus intercept and filtered
    temperature, fitted per horizon; the predicted regime is the sign of the
    diurnal part alone."""

    def __init__(self, n_har: int, lam, ctx: CalendarContext,
                 horizons: Sequence[int] = range(1, 43), delta: float = DELTA):
        self.n_har = n_har
        self.ctx = ctx
        lam_arr = np.asarray(lam, dtype=np.float64)
        self.states: Dict[int, RlsState] = {}
        for idx, k in enumerate(horizons):
            lk = float(lam_arr) if lam_arr.ndim == 0 else float(lam_arr[idx])
            self.states[int(k)] = RlsState(4 * n_har + 2, lk, delta)

    def regressor(self, t, k: int, filtered_temp_value: float) -> np.ndarray:
        row = diurnal_row(int(t) + int(k), self.ctx, self.n_har)
        return np.concatenate([row, [1.0, float(filtered_temp_value)]])

    def mu(self, t, k: int) -> float:
        nb = 4 * self.n_har
        row = diurnal_row(int(t) + int(k), self.ctx, self.n_har)
        return float(row @ self.states[int(k)].theta[:nb])

    def predict(self, t, k: int) -> int:
        return 1 if self.mu(t, k) >= 0.0 else 0

    def update(self, t, k: int, filtered_temp_value: float, y: float) -> None:
        x = self.regressor(t, k, filtered_temp_value)
        self.states[int(k)].update(x, y)


def predict_regime(predictor: RegimePredictor, t, k: int,
                   filtered_temp_value: float = 0.0) -> int:
    """Regime for target t+k from the sign of the fitted diurnal mean.

    The intercept and temperature terms are deliberately excluded from the
    sign test; the temperature input matters only for coefficient updates.
    """
    return predictor.predict(t, k)


# ---------------------------------------------------------------------------
# regressor assembly (reference path; the sweep kernel builds the same rows)

def build_regressor(kind: str, t, k: int, regime: int, diurnal: np.ndarray,
                    filtered_temp_value: float,
                    spline_stage: Optional[SplineStage] = None) -> np.ndarray:
    """[diurnal block, I, I*u, 1-I, (1-I)*v]; u = v = filtered temperature
    for the linear kinds, spline transforms for var_nonlin."""
    if kind not in KINDS:
        raise ConfigurationError(f"unknown model kind {kind!r}")
    if kind == "var_nonlin":
        if spline_stage is None:
            raise ConfigurationError("var_nonlin requires a spline stage")
        u = float(spline_stage.s_open(np.array([filtered_temp_value]))[0])
        v = float(spline_stage.s_close(np.array([filtered_temp_value]))[0])
    else:
        u = v = float(filtered_temp_value)
    ind = 1.0 if regime else 0.0
    d = np.asarray(diurnal, dtype=np.float64)
    return np.concatenate([d, [ind, ind * u, 1.0 - ind, (1.0 - ind) * v]])


# ---------------------------------------------------------------------------
# the full per-horizon sweep

@dataclass
class HorizonState:
    """Final estimator state for one horizon after a sweep."""

    k: int
    lam: float
    a_ta: float
    theta: np.ndarray
    R: np.ndarray
    theta_rgm: np.ndarray
    R_rgm: np.ndarray
    n_updates: int
    n_updates_rgm: int

    def main_state(self) -> RlsState:
        st = RlsState(self.theta.shape[0], self.lam)
        st.R = self.R.copy()
        st.theta = self.theta.copy()
        st.update_count = self.n_updates
        return st


@dataclass
class ForecastRun:
    """Forecasts, residuals, and regime choices for all horizons.

    Matrices are issue-time indexed: row t, column k-1 refer to the forecast
    issued at hour t for target t+k.  Residual cells are NaN where the
    target observation is missing or beyond the record.
    """

    forecasts: HorizonMatrix
    residuals: HorizonMatrix
    regimes: HorizonMatrix
    states: List[HorizonState]


def run_forecast(config: ModelConfig, load: HourlySeries,
                 observed_temp: HourlySeries, nwp: HorizonMatrix,
                 schedule: NwpSchedule, ctx: CalendarContext,
                 spline_stage: Optional[SplineStage] = None,
                 delta: float = DELTA) -> ForecastRun:
    """Chronological sweep over the whole record for every horizon.

    At each hour t the horizon-k estimator is first updated with the stored
    regressor from t-k against the now-observed load, then asked for the
    t+k forecast.  Hours whose inputs are unavailable (no readable weather
    forecast) yield NaN forecasts rather than being dropped.
    """
    if config.kind == "var_nonlin" and spline_stage is None:
        raise ConfigurationError("var_nonlin requires a fitted spline stage")
    if (load.start_hour != observed_temp.start_hour
            or load.n != observed_temp.n):
        raise ParameterError("load and temperature series must be co-registered")

    n = load.n
    hours = load.hours()
    k_max = config.k_max
    eff = effective_matrix(nwp, schedule, load.start_hour, n, k_max)
    loadv = np.ascontiguousarray(load.values)
    tempv = np.ascontiguousarray(observed_temp.values)
    var_regime = 0 if config.kind == "fix_lin" else 1

    fc_mat = np.full((n, k_max), np.nan)
    res_mat = np.full((n, k_max), np.nan)
    rg_mat = np.full((n, k_max), np.nan)
    states: List[HorizonState] = []

    for k in range(1, k_max + 1):
        kk = k - 1
        lam = float(config.lambdas[kk])
        a = float(config.a_ta[kk])
        y_obs = backend.lowpass_scan(tempv, a, 0.0, False)
        ft = backend.extend_filtered(y_obs, eff[:, :k], a, k)
        drows = diurnal_matrix(hours + k, ctx, config.n_har)
        tod = ctx.tod_array(hours + k)
        fixed_ind = ((tod >= config.open_hour)
                     & (tod <= config.close_hour)).astype(np.float64)
        if config.kind == "var_nonlin":
            u = spline_stage.s_open(ft)
            v = spline_stage.s_close(ft)
        else:
            u = ft
            v = ft
        (fc, rg, theta, R, theta_rgm, R_rgm, n_upd, n_upd_rgm,
         err, err_t) = backend.sweep_horizon(
            loadv, drows, fixed_ind, ft,
            np.ascontiguousarray(u), np.ascontiguousarray(v),
            k, lam, lam, config.n_har, var_regime, delta)
        if err != 0:
            which = "main" if err == 1 else "regime"
            raise ConditioningError(
                f"horizon {k}: {which} information matrix singular at "
                f"sample {err_t}"
            )
        fc_mat[:, kk] = fc
        rg_mat[:, kk] = rg
        res_mat[:n - k, kk] = loadv[k:] - fc[:n - k]
        states.append(HorizonState(k, lam, a, theta, R, theta_rgm, R_rgm,
                                   int(n_upd), int(n_upd_rgm)))

    return ForecastRun(
        forecasts=HorizonMatrix(hours, fc_mat),
        residuals=HorizonMatrix(hours, res_mat),
        regimes=HorizonMatrix(hours, rg_mat),
        states=states,
    )


# ---------------------------------------------------------------------------
# AR noise model on one-step residuals

@dataclass
class NoiseModel:
    """AR correction of one-step residuals at lags 1, 2, and 24."""

    state: RlsState
    lam: float = 0.997
    lags = (1, 2, 24)


def noise_fit_apply(residuals_1step: HourlySeries,
                    lam: float = 0.997) -> tuple:
    """Recursively fit eps_{t+1} ~ eps_t, eps_{t-1}, eps_{t-23} and subtract.

    Returns (corrected series, fitted NoiseModel).  Each prediction uses
    coefficients estimated from residuals strictly before the target; the
    first 24 outputs have no full lag window and stay NaN.
    """
    r = residuals_1step.values
    n = r.shape[0]
    if n < 25:
        raise ParameterError(
            f"need at least 25 residual samples for lag 24, got {n}"
        )
    state = RlsState(3, lam)
    out = np.full(n, np.nan)
    x = np.empty(3)
    for i in range(24, n):
        x[0] = r[i - 1]
        x[1] = r[i - 2]
        x[2] = r[i - 24]
        y = r[i]
        if not (np.isfinite(x).all() and np.isfinite(y)):
            continue
        out[i] = y - state.predict(x)
        state.update(x, y)
    corrected = HourlySeries(residuals_1step.start, out,
                             residuals_1step.gap_mask,
                             residuals_1step.units)
    return corrected, NoiseModel(state, lam)
