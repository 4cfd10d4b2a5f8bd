"""Command-line pipeline.

Subcommands mirror the processing chain: synth -> ingest -> repair ->
calibrate-nwp -> fit-spline -> optimize -> forecast -> noise -> evaluate.
Data flows through explicit file paths only; diagnostics go to stderr.
Exit codes: 0 success, 1 usage error, 2 data/model error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from coldcast import evaluate, optimize, synth
from coldcast.errors import ColdcastError, ConfigurationError, ParseError
from coldcast.forecaster import (
    ModelConfig,
    fit_spline_stage,
    load_spline_stage,
    run_forecast,
    save_spline_stage,
)
from coldcast.basis import LowPassFilter
from coldcast.rls import save_state
from coldcast.series import (
    CalendarContext,
    HourlySeries,
    from_epoch_hours,
    ingest_csv,
    repair_gaps,
    write_csv,
)
from coldcast.weather import (
    HorizonMatrix,
    NwpSchedule,
    calibrate_nwp,
    read_horizon_csv,
    write_horizon_csv,
)

MODEL_NAMES = {"fix-lin": "fix_lin", "var-lin": "var_lin",
               "var-nonlin": "var_nonlin"}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"usage error: {message}\n")
        raise SystemExit(1)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# model config files: flat key = value, scalar flags override

_CONFIG_INT = {"n_har", "k_max", "open_hour", "close_hour", "burn_in_hours"}
_CONFIG_FLOAT = {"lambda", "a_ta"}
_CONFIG_STR = {"kind"}


def read_model_config(path) -> dict:
    out = {}
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
            if key in _CONFIG_INT:
                out[key] = int(raw)
            elif key in _CONFIG_FLOAT:
                out[key] = float(raw)
            elif key in _CONFIG_STR:
                out[key] = raw
            else:
                raise ParseError(f"{path}: unknown config key {key!r}")
    return out


def _build_config(args) -> ModelConfig:
    """defaults <- config file <- scalar flags <- per-horizon params csv."""
    raw = {}
    if getattr(args, "config", None):
        raw = read_model_config(args.config)
    kw = dict(
        kind=raw.get("kind", "var_lin"),
        n_har=raw.get("n_har", 10),
        k_max=raw.get("k_max", 42),
        lambdas=raw.get("lambda", 0.998),
        a_ta=raw.get("a_ta", 0.6),
        open_hour=raw.get("open_hour", 8),
        close_hour=raw.get("close_hour", 21),
        burn_in_hours=raw.get("burn_in_hours", 336),
    )
    if getattr(args, "model", None):
        kw["kind"] = MODEL_NAMES[args.model]
    for flag, key in (("lam", "lambdas"), ("a_ta", "a_ta"),
                      ("burn_in", "burn_in_hours"), ("n_har", "n_har"),
                      ("k_max", "k_max")):
        v = getattr(args, flag, None)
        if v is not None:
            kw[key] = v
    config = ModelConfig(**kw)
    if getattr(args, "params", None):
        result = optimize.read_optimization_csv(args.params)
        config = optimize.config_with_optimized(config, result)
    return config


def _parse_horizons(text: str, k_max: int):
    ks = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "-" in tok:
            a, _, b = tok.partition("-")
            ks.extend(range(int(a), int(b) + 1))
        else:
            ks.append(int(tok))
    for k in ks:
        if not (1 <= k <= k_max):
            raise ParseError(f"horizon {k} outside 1..{k_max}")
    return sorted(set(ks))


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_synth(args) -> int:
    cfg = synth.read_scenario(args.scenario) if args.scenario \
        else synth.ScenarioConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    load, temp, nwp, truth = synth.generate(cfg)
    write_csv(load, args.out_load)
    write_csv(temp, args.out_temp)
    write_horizon_csv(nwp, args.out_nwp)
    if args.out_regime:
        with open(args.out_regime, "w", newline="") as fh:
            fh.write("time,regime\r\n")
            h0 = load.start_hour
            for i, r in enumerate(truth.regime):
                fh.write(f"{from_epoch_hours(h0 + i).isoformat()},{int(r)}\r\n")
    _log(f"synth: {load.n} hours, {nwp.n_issues} forecast issues, "
         f"seed {cfg.seed}")
    return 0


def _cmd_ingest(args) -> int:
    series = ingest_csv(args.infile, time_col=args.time_col,
                        value_col=args.value_col)
    write_csv(series, args.out)
    _log(f"ingest: {series.n} hours, {int(series.gap_mask.sum())} gaps")
    return 0


def _cmd_repair(args) -> int:
    series = ingest_csv(args.infile)
    repaired = repair_gaps(series, args.threshold)
    write_csv(repaired, args.out)
    _log(f"repair: filled {int(np.isnan(series.values).sum())} missing hours")
    return 0


def _cmd_calibrate(args) -> int:
    nwp = read_horizon_csv(args.nwp)
    obs = ingest_csv(args.obs)
    calibrated = calibrate_nwp(nwp, obs, span=args.span,
                               min_pairs=args.min_pairs)
    write_horizon_csv(calibrated, args.out)
    _log(f"calibrate-nwp: {nwp.n_issues} issues x {nwp.k_max} horizons, "
         f"span {args.span}")
    return 0


def _cmd_fit_spline(args) -> int:
    load = ingest_csv(args.load)
    temp = ingest_csv(args.temp)
    config = _build_config(args)
    ctx = CalendarContext()
    a = args.stage_a if args.stage_a is not None else float(config.a_ta[0])
    filt = LowPassFilter(a)
    ftemp = filt.apply(temp.values)

    if args.labels == "fixed":
        tod = ctx.tod_array(load.hours())
        labels = ((tod >= config.open_hour)
                  & (tod <= config.close_hour)).astype(np.int8)
    else:
        if not args.nwp:
            raise ConfigurationError(
                "--labels variable needs --nwp for the regime sweep"
            )
        nwp = read_horizon_csv(args.nwp)
        cfg1 = ModelConfig(kind="var_lin", n_har=config.n_har, k_max=1,
                           lambdas=float(config.lambdas[0]),
                           a_ta=a, open_hour=config.open_hour,
                           close_hour=config.close_hour,
                           burn_in_hours=config.burn_in_hours)
        run = run_forecast(cfg1, load, temp, nwp, NwpSchedule(), ctx)
        rg = run.regimes.values[:, 0]
        labels = np.empty(load.n, dtype=np.int8)
        labels[1:] = rg[:-1]  # regime predicted at t-1 for target t
        labels[0] = labels[1]
    stage = fit_spline_stage(load, ftemp, labels, degree=args.degree,
                             n_interior=args.interior,
                             fit_hours=args.train_hours)
    save_spline_stage(stage, args.out)
    _log(f"fit-spline: open {stage.n_open} / close {stage.n_close} samples, "
         f"filter a={a}")
    return 0


def _cmd_optimize(args) -> int:
    load = ingest_csv(args.load)
    temp = ingest_csv(args.temp)
    nwp = read_horizon_csv(args.nwp)
    config = _build_config(args)
    stage = load_spline_stage(args.spline) if args.spline else None
    ctx = CalendarContext()
    horizons = _parse_horizons(args.horizons, config.k_max) \
        if args.horizons else None
    result = optimize.optimize_all(
        config, load, temp, nwp, NwpSchedule(), ctx, stage,
        horizons=horizons, start=(args.start_lambda, args.start_a),
        maxfev=args.maxfev, jobs=args.jobs)
    optimize.write_optimization_csv(result, args.out)
    _log(f"optimize: {result.horizons.shape[0]} horizons, "
         f"{int(result.evals.sum())} objective evaluations")
    return 0


def _cmd_forecast(args) -> int:
    load = ingest_csv(args.load)
    temp = ingest_csv(args.temp)
    nwp = read_horizon_csv(args.nwp)
    config = _build_config(args)
    stage = load_spline_stage(args.spline) if args.spline else None
    run = run_forecast(config, load, temp, nwp, NwpSchedule(),
                       CalendarContext(), spline_stage=stage)
    write_horizon_csv(run.forecasts, args.out_forecast)
    write_horizon_csv(run.residuals, args.out_residual)
    if args.out_regime:
        write_horizon_csv(run.regimes, args.out_regime)
    if args.state_dir:
        out = Path(args.state_dir)
        out.mkdir(parents=True, exist_ok=True)
        for hs in run.states:
            save_state(hs.main_state(), out / f"state_k{hs.k:02d}.rls")
    _log(f"forecast: kind {config.kind}, {load.n} hours x "
         f"{config.k_max} horizons")
    return 0


def _cmd_noise(args) -> int:
    residuals = read_horizon_csv(args.residuals)
    series = HourlySeries(from_epoch_hours(int(residuals.issue_hours[0]) + 1),
                          residuals.values[:, 0])
    lam = args.lam
    if args.grid:
        a, b, step = (float(v) for v in args.grid.split(":"))
        grid = list(np.arange(a, b + step / 2, step))
        lam = optimize.grid_search_noise_lambda(series, grid)
        _log(f"noise: grid search selected lambda {lam:.3f}")
    from coldcast.forecaster import noise_fit_apply
    corrected, model = noise_fit_apply(series, lam)
    write_csv(corrected, args.out)
    c = model.state.theta
    _log(f"noise: lambda {lam}, coefficients "
         f"lag1 {c[0]:+.3f} lag2 {c[1]:+.3f} lag24 {c[2]:+.3f}")
    return 0


def _cmd_evaluate(args) -> int:
    residuals = read_horizon_csv(args.residuals)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curve = evaluate.rmse_per_horizon(residuals, args.burn_in)
    evaluate.write_rmse_csv(curve, out / "rmse.csv")

    # diagnostics apply to the one-step residuals past the burn-in
    one = residuals.values[args.burn_in:, 0]
    one = one[np.isfinite(one)]
    result = evaluate.acf(one, args.max_lag)
    evaluate.write_acf_csv(result, out / "acf.csv")
    summary = evaluate.distribution_summary(one, args.bins)
    evaluate.write_qq_csv(summary, out / "qq.csv")
    evaluate.write_hist_csv(summary, out / "hist.csv")
    _log(f"evaluate: RMSE_1 {curve.rmse[0]:.4f} over {curve.counts[0]} "
         f"residuals; outputs in {out}")
    return 0


# ---------------------------------------------------------------------------

def _add_config_flags(p) -> None:
    p.add_argument("--config", help="flat key = value model config file")
    p.add_argument("--params", help="per-horizon parameter CSV from optimize")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="forgetting factor for all horizons")
    p.add_argument("--a-ta", dest="a_ta", type=float,
                   help="temperature filter coefficient for all horizons")
    p.add_argument("--n-har", type=int, help="diurnal harmonics")
    p.add_argument("--k-max", type=int, help="largest forecast horizon")
    p.add_argument("--burn-in", type=int, help="burn-in hours")


def build_parser() -> _Parser:
    parser = _Parser(prog="coldcast",
                     description="Adaptive refrigeration load forecasting")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("--scenario", help="flat key = value scenario file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out-load", default="load.csv")
    p.add_argument("--out-temp", default="temp.csv")
    p.add_argument("--out-nwp", default="nwp.csv")
    p.add_argument("--out-regime", help="optional true regime labels CSV")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate and normalize an hourly CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--time-col", default="time")
    p.add_argument("--value-col", default="value")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("repair", help="fill gaps from 24 h / 168 h earlier")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=int, default=24,
                   help="gaps longer than this use the week-before source")
    p.set_defaults(func=_cmd_repair)

    p = sub.add_parser("calibrate-nwp",
                       help="bias-correct forecasts against observations")
    p.add_argument("--nwp", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--span", type=float, default=0.75)
    p.add_argument("--min-pairs", type=int, default=100)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("fit-spline",
                       help="fit the per-regime temperature spline stage")
    p.add_argument("--load", required=True)
    p.add_argument("--temp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--nwp", help="needed with --labels variable")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--interior", type=int, default=5)
    p.add_argument("--labels", choices=("fixed", "variable"), default="fixed")
    p.add_argument("--train-hours", type=int,
                   help="fit on the first N hours only")
    p.add_argument("--stage-a", type=float,
                   help="filter coefficient for stage inputs "
                        "(default: config a_ta)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_fit_spline, model=None)

    p = sub.add_parser("optimize",
                       help="per-horizon search for lambda and a_Ta")
    p.add_argument("--load", required=True)
    p.add_argument("--temp", required=True)
    p.add_argument("--nwp", required=True, help="calibrated forecast CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=sorted(MODEL_NAMES), default=None)
    p.add_argument("--spline", help="spline stage file for var-nonlin")
    p.add_argument("--horizons", help="e.g. 1,4,8 or 1-42 (default all)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--start-lambda", type=float, default=0.998)
    p.add_argument("--start-a", type=float, default=0.6)
    p.add_argument("--maxfev", type=int, default=200)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("forecast", help="run a model over the whole record")
    p.add_argument("--model", choices=sorted(MODEL_NAMES), required=True)
    p.add_argument("--load", required=True)
    p.add_argument("--temp", required=True)
    p.add_argument("--nwp", required=True, help="calibrated forecast CSV")
    p.add_argument("--out-forecast", default="forecast.csv")
    p.add_argument("--out-residual", default="residual.csv")
    p.add_argument("--out-regime")
    p.add_argument("--spline", help="spline stage file for var-nonlin")
    p.add_argument("--state-dir", help="write per-horizon estimator dumps")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("noise",
                       help="AR noise model on the one-step residuals")
    p.add_argument("--residuals", required=True,
                   help="residual matrix CSV from forecast")
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.997)
    p.add_argument("--grid", help="lambda grid lo:hi:step, overrides --lambda")
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("evaluate", help="RMSE curve and residual diagnostics")
    p.add_argument("--residuals", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--burn-in", type=int, default=336)
    p.add_argument("--max-lag", type=int, default=48)
    p.add_argument("--bins", type=int, default=30)
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ColdcastError as exc:
        _log(f"error: {exc}")
        return 2
    except OSError as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
