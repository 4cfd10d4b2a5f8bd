"""Offline per-horizon parameter optimization.

For each horizon the forgetting factor and the temperature filter
coefficient are tuned jointly by minimizing that horizon's RMSE over full
forecast replays.  The search is a Nelder-Mead simplex in a transformed
space whose sigmoid maps enforce lambda in (0.9, 1) and a_Ta in [0, 1); the
a_Ta map deliberately overshoots below zero and clamps, so the boundary
value 0 (no filtering) is exactly representable.  The best visited point is
returned, never a worse simplex centroid.

Also here: the grid search for the noise-model forgetting factor.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from coldcast import backend
from coldcast.basis import diurnal_matrix
from coldcast.errors import ObjectiveError, ParameterError, ParseError
from coldcast.forecaster import (
    ModelConfig,
    SplineStage,
    noise_fit_apply,
    run_forecast,
)
from coldcast.rls import DELTA
from coldcast.series import CalendarContext, HourlySeries
from coldcast.weather import HorizonMatrix, NwpSchedule, effective_matrix

DEFAULT_START = (0.998, 0.6)

# a_raw = -0.05 + 1.05 * sigmoid(u), clamped into [0, 1): sigma(u) below
# ~0.0476 lands exactly on the a_Ta = 0 boundary.
_A_LO = -0.05
_A_SPAN = 1.05
_A_MAX = 1.0 - 1e-9


def _sigmoid(u: float) -> float:
    if u >= 0:
        return 1.0 / (1.0 + np.exp(-u))
    e = np.exp(u)
    return e / (1.0 + e)


def _logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


def _to_params(u: np.ndarray) -> Tuple[float, float]:
    lam = 0.9 + 0.1 * _sigmoid(u[0])
    a = _A_LO + _A_SPAN * _sigmoid(u[1])
    a = min(max(a, 0.0), _A_MAX)
    return lam, a


def _from_params(lam: float, a: float) -> np.ndarray:
    if not (0.9 < lam < 1.0):
        raise ParameterError(f"lambda start must be in (0.9, 1), got {lam}")
    if not (0.0 <= a < 1.0):
        raise ParameterError(f"a_Ta start must be in [0, 1), got {a}")
    s = (a - _A_LO) / _A_SPAN
    s = min(max(s, 1e-12), 1.0 - 1e-12)
    return np.array([_logit((lam - 0.9) / 0.1), _logit(s)])


def optimize_horizon(k: int, objective: Callable[[float, float], float],
                     start: Tuple[float, float] = DEFAULT_START,
                     fatol: float = 1e-5, maxfev: int = 200):
    """Minimize objective(lambda, a_Ta) for one horizon.

    Returns (lambda, a_Ta, rmse, evals).  Converges when the simplex
    objective spread drops below fatol or after maxfev evaluations; after
    the search, the exact a_Ta = 0 boundary is adopted when the best point
    sits near it and the boundary value is at least as good.
    """
    f0 = float(objective(*start))
    if not np.isfinite(f0):
        raise ObjectiveError(
            f"horizon {k}: objective not finite at start {start}"
        )
    best = {"val": f0, "lam": float(start[0]), "a": float(start[1])}
    evals = [1]

    def wrapped(u):
        lam, a = _to_params(u)
        val = float(objective(lam, a))
        evals[0] += 1
        if np.isfinite(val) and val < best["val"]:
            best["val"] = val
            best["lam"] = lam
            best["a"] = a
        return val

    # Unit-scale starting simplex: the coordinates are logit-transformed,
    # so steps of order one are needed to traverse the parameter range
    # (scipy's default 5% perturbation stalls far from a boundary).
    x0 = _from_params(*start)
    simplex = np.array([x0, x0 + [1.0, 0.0], x0 + [0.0, 1.0]])
    minimize(wrapped, x0, method="Nelder-Mead",
             options={"fatol": fatol, "xatol": 1e12, "maxfev": maxfev,
                      "maxiter": 10 * maxfev, "initial_simplex": simplex})

    if 0.0 < best["a"] < 0.15:
        f_bound = float(objective(best["lam"], 0.0))
        evals[0] += 1
        if np.isfinite(f_bound) and (
                f_bound <= best["val"] + 1e-12 * max(1.0, abs(best["val"]))):
            best["val"] = f_bound
            best["a"] = 0.0
    return best["lam"], best["a"], best["val"], evals[0]


class HorizonObjective:
    """RMSE_k of a full single-horizon forecast replay as a function of
    (lambda, a_Ta); everything not depending on the parameters is
    precomputed once."""

    def __init__(self, k: int, config: ModelConfig, load: HourlySeries,
                 observed_temp: HourlySeries, nwp: HorizonMatrix,
                 schedule: NwpSchedule, ctx: CalendarContext,
                 spline_stage: Optional[SplineStage] = None):
        if config.kind == "var_nonlin" and spline_stage is None:
            raise ObjectiveError("var_nonlin objective requires a spline stage")
        self.k = int(k)
        self.kind = config.kind
        self.n_har = config.n_har
        self.burn = config.burn_in_hours
        self.stage = spline_stage
        self.loadv = np.ascontiguousarray(load.values)
        self.tempv = np.ascontiguousarray(observed_temp.values)
        n = load.n
        hours = load.hours()
        eff = effective_matrix(nwp, schedule, load.start_hour, n, self.k)
        self.eff = eff[:, :self.k]
        self.drows = diurnal_matrix(hours + self.k, ctx, config.n_har)
        tod = ctx.tod_array(hours + self.k)
        self.fixed_ind = ((tod >= config.open_hour)
                          & (tod <= config.close_hour)).astype(np.float64)
        self.var_regime = 0 if config.kind == "fix_lin" else 1

    def __call__(self, lam: float, a: float) -> float:
        k = self.k
        y_obs = backend.lowpass_scan(self.tempv, a, 0.0, False)
        ft = backend.extend_filtered(y_obs, self.eff, a, k)
        if self.kind == "var_nonlin":
            u = np.ascontiguousarray(self.stage.s_open(ft))
            v = np.ascontiguousarray(self.stage.s_close(ft))
        else:
            u = ft
            v = ft
        (fc, _rg, _th, _R, _tr, _Rr, _nu, _nur,
         err, _et) = backend.sweep_horizon(
            self.loadv, self.drows, self.fixed_ind, ft, u, v,
            k, float(lam), float(lam), self.n_har, self.var_regime, DELTA)
        if err != 0:
            return float("inf")
        n = self.loadv.shape[0]
        res = self.loadv[k:] - fc[:n - k]
        res = res[self.burn:]
        res = res[np.isfinite(res)]
        if res.shape[0] == 0:
            return float("inf")
        return float(np.sqrt(np.mean(res ** 2)))


@dataclass(frozen=True)
class OptimizationResult:
    horizons: np.ndarray
    lambdas: np.ndarray
    a_ta: np.ndarray
    rmse: np.ndarray
    evals: np.ndarray


def _optimize_one(args):
    (k, config, load, temp, nwp, schedule, ctx, stage, start,
     fatol, maxfev) = args
    obj = HorizonObjective(k, config, load, temp, nwp, schedule, ctx, stage)
    lam, a, rmse, evals = optimize_horizon(k, obj, start, fatol, maxfev)
    return k, lam, a, rmse, evals


def optimize_all(config: ModelConfig, load: HourlySeries,
                 observed_temp: HourlySeries, nwp: HorizonMatrix,
                 schedule: NwpSchedule, ctx: CalendarContext,
                 spline_stage: Optional[SplineStage] = None,
                 horizons: Optional[Sequence[int]] = None,
                 start: Tuple[float, float] = DEFAULT_START,
                 fatol: float = 1e-5, maxfev: int = 200,
                 jobs: int = 1) -> OptimizationResult:
    """Run optimize_horizon for each requested horizon (default: all)."""
    ks = list(horizons) if horizons is not None else list(
        range(1, config.k_max + 1))
    for k in ks:
        if not (1 <= k <= config.k_max):
            raise ParameterError(f"horizon {k} outside 1..{config.k_max}")
    work = [(k, config, load, observed_temp, nwp, schedule, ctx,
             spline_stage, start, fatol, maxfev) for k in ks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_optimize_one, work))
    else:
        rows = [_optimize_one(w) for w in work]
    rows.sort(key=lambda r: r[0])
    return OptimizationResult(
        horizons=np.array([r[0] for r in rows], dtype=np.int64),
        lambdas=np.array([r[1] for r in rows]),
        a_ta=np.array([r[2] for r in rows]),
        rmse=np.array([r[3] for r in rows]),
        evals=np.array([r[4] for r in rows], dtype=np.int64),
    )


def write_optimization_csv(result: OptimizationResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["horizon", "lambda", "a_ta", "rmse", "evals"])
        for i, k in enumerate(result.horizons):
            w.writerow([int(k), repr(float(result.lambdas[i])),
                        repr(float(result.a_ta[i])),
                        repr(float(result.rmse[i])),
                        int(result.evals[i])])


def read_optimization_csv(path) -> OptimizationResult:
    ks, lams, ats, rms, evs = [], [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        need = ["horizon", "lambda", "a_ta", "rmse", "evals"]
        try:
            idx = [header.index(c) for c in need]
        except ValueError:
            raise ParseError(f"{path}: header must contain {need}") from None
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                ks.append(int(row[idx[0]]))
                lams.append(float(row[idx[1]]))
                ats.append(float(row[idx[2]]))
                rms.append(float(row[idx[3]]))
                evs.append(int(row[idx[4]]))
            except (ValueError, IndexError) as exc:
                raise ParseError(
                    f"{path}: bad row {row_no}: {exc}"
                ) from None
    if not ks:
        raise ParseError(f"{path}: no data rows")
    return OptimizationResult(np.array(ks, dtype=np.int64), np.array(lams),
                              np.array(ats), np.array(rms),
                              np.array(evs, dtype=np.int64))


def config_with_optimized(config: ModelConfig,
                          result: OptimizationResult) -> ModelConfig:
    """Copy of config with per-horizon parameters from an optimization run;
    horizons absent from the result keep the config's values."""
    lams = config.lambdas.copy()
    ats = config.a_ta.copy()
    for i, k in enumerate(result.horizons):
        if 1 <= k <= config.k_max:
            lams[k - 1] = result.lambdas[i]
            ats[k - 1] = result.a_ta[i]
    return ModelConfig(kind=config.kind, n_har=config.n_har,
                       k_max=config.k_max, lambdas=lams, a_ta=ats,
                       open_hour=config.open_hour,
                       close_hour=config.close_hour,
                       burn_in_hours=config.burn_in_hours)


def grid_search_noise_lambda(residuals: HourlySeries,
                             grid: Sequence[float]) -> float:
    """Noise-model forgetting factor minimizing post-correction RMSE_1.

    Ties go to the larger lambda (more stable estimates).
    """
    grid = list(grid)
    if not grid:
        raise ParameterError("grid must be nonempty")
    for g in grid:
        if not (0.9 < g < 1.0):
            raise ParameterError(f"grid values must be in (0.9, 1), got {g}")
    best_lam = None
    best_rmse = None
    for lam in grid:
        corrected, _model = noise_fit_apply(residuals, lam)
        vals = corrected.values
        vals = vals[np.isfinite(vals)]
        if vals.shape[0] == 0:
            continue
        rmse = float(np.sqrt(np.mean(vals ** 2)))
        if (best_rmse is None or rmse < best_rmse
                or (rmse == best_rmse and lam > best_lam)):
            best_rmse = rmse
            best_lam = lam
    if best_lam is None:
        raise ParameterError("no grid point produced a finite RMSE")
    return float(best_lam)
