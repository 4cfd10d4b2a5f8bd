"""Synthetic supermarket-refrigeration scenarios with known ground truth.

The generator mimics the structure of real refrigeration load records: a
two-regime daily square wave (opening hours high, night coverings low), a
smooth within-day bump, a piecewise-linear response to low-pass-filtered
ambient temperature with a kink at warm temperatures, scheduled defrost
spikes, and AR(1) noise.  Ambient temperature combines a seasonal drift, a
daily cycle peaking mid-afternoon, and AR(1) weather systems.  Weather
forecasts are the true future temperature plus a constant bias and a
random-walk error across lead time, issued a few times per day with a
completion delay.

Everything is driven by one seeded generator, so a fixed seed reproduces
the scenario bit for bit.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from coldcast.errors import ParameterError, ParseError
from coldcast.series import (
    CalendarContext,
    HourlySeries,
    parse_timestamp,
    to_epoch_hours,
)
from coldcast.weather import HorizonMatrix, NwpSchedule


@dataclass
class ScenarioConfig:
    """Knobs of the synthetic world; defaults give the standard scenario."""

    start: str = "2012-05-01T00:00:00+00:00"
    n_hours: int = 2208
    seed: int = 20120501

    # true operating regime: open when open_hour <= tod < close_hour
    open_hour: int = 7
    close_hour: int = 23
    base_close: float = 12.0
    base_open: float = 30.0
    amp_workday: float = 6.0
    amp_weekend: float = 4.0
    defrost_kw: float = 5.0

    # ambient temperature process
    temp_mean: float = 16.0
    temp_season_amp: float = 6.0
    temp_diurnal_amp: float = 4.0
    temp_ar_phi: float = 0.985
    temp_ar_sigma: float = 0.4

    # load response to filtered temperature
    a_gen: float = 0.6
    slope: float = 1.2
    temp_ref: float = 16.0
    kink_temp: float = 18.0
    kink_extra_slope: float = 2.4
    slope_scale_open: float = 1.6

    # load noise
    noise_phi: float = 0.6
    noise_sigma: float = 0.8

    # weather forecast system
    nwp_bias: float = -3.0
    nwp_err0: float = 0.3
    nwp_err_step: float = 0.06
    nwp_k_max: int = 54
    nwp_lead_back_hours: int = 12
    issues_per_day: int = 4
    completion_delay_hours: int = 4

    def __post_init__(self):
        if self.n_hours < 1:
            raise ParameterError("n_hours must be >= 1")
        if not (0 <= self.open_hour < self.close_hour <= 24):
            raise ParameterError("need 0 <= open_hour < close_hour <= 24")
        if not (0.0 <= self.a_gen < 1.0):
            raise ParameterError("a_gen must be in [0, 1)")
        for name in ("amp_workday", "amp_weekend", "defrost_kw",
                     "temp_ar_sigma", "noise_sigma", "nwp_err0",
                     "nwp_err_step"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")

    def schedule(self) -> NwpSchedule:
        return NwpSchedule(self.issues_per_day, self.completion_delay_hours)


@dataclass
class SimTruth:
    """Generative ground truth for oracle tests."""

    regime: np.ndarray        # true 0/1 regime at each record hour
    temp_true: np.ndarray     # noise-free ambient temperature
    f_temp: np.ndarray        # generative filtered temperature
    clean_load: np.ndarray    # load before AR noise
    config: ScenarioConfig


def _regime_labels(tod: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    return ((tod >= config.open_hour) & (tod < config.close_hour))


def _temp_term(f: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    base = config.slope * (f - config.temp_ref)
    extra = config.kink_extra_slope * np.maximum(0.0, f - config.kink_temp)
    return base + extra


def generate(config: ScenarioConfig,
             ctx: CalendarContext = None) -> Tuple[HourlySeries, HourlySeries,
                                                   HorizonMatrix, SimTruth]:
    """Build (load, observed temperature, raw NWP matrix, truth)."""
    if ctx is None:
        ctx = CalendarContext()
    rng = np.random.default_rng(config.seed)
    start_dt = parse_timestamp(config.start)
    h0 = to_epoch_hours(start_dt)
    n = config.n_hours

    # temperature on an extended axis so every forecast target has a truth
    lead = config.nwp_lead_back_hours
    n_ext = n + lead + config.nwp_k_max
    hours_ext = h0 - lead + np.arange(n_ext, dtype=np.int64)
    day = (hours_ext - h0) / 24.0
    tod_ext = ctx.tod_array(hours_ext)
    season = config.temp_season_amp * np.cos(2.0 * np.pi * (day - 75.0) / 365.0)
    diurnal = config.temp_diurnal_amp * np.cos(2.0 * np.pi * (tod_ext - 15.0) / 24.0)
    dev = np.empty(n_ext)
    eta = rng.standard_normal(n_ext)
    sd0 = config.temp_ar_sigma / max(np.sqrt(1.0 - config.temp_ar_phi ** 2), 1e-6)
    dev[0] = sd0 * eta[0]
    for t in range(1, n_ext):
        dev[t] = config.temp_ar_phi * dev[t - 1] + config.temp_ar_sigma * eta[t]
    temp_ext = config.temp_mean + season + diurnal + dev

    # generative low-pass filter, warmed up on the extended head
    f_ext = np.empty(n_ext)
    f_ext[0] = temp_ext[0]
    a = config.a_gen
    for t in range(1, n_ext):
        f_ext[t] = a * f_ext[t - 1] + (1.0 - a) * temp_ext[t]

    sl = slice(lead, lead + n)
    temp_rec = temp_ext[sl]
    f_rec = f_ext[sl]
    tod = tod_ext[sl]
    hours = hours_ext[sl]

    regime = _regime_labels(tod, config)
    workday = ctx.workday_array(hours)
    width = config.close_hour - config.open_hour
    phase = (tod + 0.5 - config.open_hour) / width
    bump_shape = np.where(regime, np.sin(np.pi * np.clip(phase, 0.0, 1.0)), 0.0)
    amp = np.where(workday, config.amp_workday, config.amp_weekend)
    base = np.where(regime, config.base_open, config.base_close)
    scale = np.where(regime, config.slope_scale_open, 1.0)
    defrost = np.where(np.isin(tod, (6.0, 20.0)), config.defrost_kw, 0.0)
    clean = base + amp * bump_shape + scale * _temp_term(f_rec, config) + defrost

    noise = np.empty(n)
    eta_l = rng.standard_normal(n)
    noise[0] = config.noise_sigma * eta_l[0]
    for t in range(1, n):
        noise[t] = config.noise_phi * noise[t - 1] + config.noise_sigma * eta_l[t]
    load_vals = clean + noise

    # forecast issues every (24/issues_per_day) hours, aligned to the record
    # start, beginning far enough back that hour 0 already has coverage
    period = 24 // config.issues_per_day
    first = h0 - lead
    first += (h0 - first) % period
    issue_hours = np.arange(first, h0 + n, period, dtype=np.int64)
    k_raw = config.nwp_k_max
    vals = np.empty((issue_hours.shape[0], k_raw))
    for i, ih in enumerate(issue_hours):
        err = np.empty(k_raw)
        steps = rng.standard_normal(k_raw)
        err[0] = config.nwp_err0 * steps[0]
        for j in range(1, k_raw):
            err[j] = err[j - 1] + config.nwp_err_step * steps[j]
        base_idx = int(ih) - (h0 - lead)
        truth_slice = temp_ext[base_idx + 1: base_idx + 1 + k_raw]
        vals[i] = truth_slice + config.nwp_bias + err

    load = HourlySeries(start_dt, load_vals, units="kW")
    temp = HourlySeries(start_dt, temp_rec, units="degC")
    nwp = HorizonMatrix(issue_hours, vals)
    truth = SimTruth(regime.astype(np.int8), temp_rec, f_rec, clean, config)
    return load, temp, nwp, truth


def inject_gaps(series: HourlySeries,
                gap_spec: Sequence[Tuple[int, int]]) -> HourlySeries:
    """Mark (start index, length) slots missing for repair-pipeline tests."""
    vals = series.values.copy()
    mask = series.gap_mask.copy()
    for start, length in gap_spec:
        if length < 1:
            raise ParameterError(f"gap length must be >= 1, got {length}")
        if start < 0 or start + length > series.n:
            raise ParameterError(
                f"gap ({start}, {length}) outside record of {series.n} hours"
            )
        vals[start:start + length] = np.nan
        mask[start:start + length] = True
    return HourlySeries(series.start, vals, mask, series.units)


# ---------------------------------------------------------------------------
# flat key=value scenario files

def write_scenario(config: ScenarioConfig, path) -> None:
    with open(path, "w") as fh:
        for f in dataclasses.fields(ScenarioConfig):
            fh.write(f"{f.name} = {getattr(config, f.name)}\n")


def read_scenario(path) -> ScenarioConfig:
    """Parse a flat key = value file; unknown keys are rejected."""
    types = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}
    kwargs = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise ParseError(f"{path}: line {line_no}: expected key = value")
            key, _, raw = s.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in types:
                raise ParseError(f"{path}: unknown scenario key {key!r}")
            try:
                if types[key] == "int":
                    kwargs[key] = int(raw)
                elif types[key] == "float":
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = raw
            except ValueError:
                raise ParseError(
                    f"{path}: line {line_no}: bad value {raw!r} for {key}"
                ) from None
    return ScenarioConfig(**kwargs)
