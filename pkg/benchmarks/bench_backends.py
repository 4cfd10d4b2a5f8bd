#!/usr/bin/env python3
"""Time the hot kernels on both backends and print the speedups.

Each kernel runs on a realistic problem built from a synthetic year of
data.  The compiled backend is warmed up before timing so JIT compilation
is not measured.  Usage:

    python3 benchmarks/bench_backends.py [--repeats 7] [--hours 8760]
"""

import argparse
import statistics
import time

import numpy as np

from coldcast import CalendarContext, ScenarioConfig, generate
from coldcast import backend
from coldcast.basis import diurnal_matrix, quantile_knots
from coldcast.weather import effective_matrix

KERNELS = ("lowpass_scan", "extend_filtered", "spline_curve",
           "sweep_horizon")


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7,
                    help="timed runs per kernel; the median is reported")
    ap.add_argument("--hours", type=int, default=8760,
                    help="length of the synthetic record")
    ap.add_argument("--k", type=int, default=24,
                    help="forecast horizon for the sweep kernel")
    ap.add_argument("--n-har", type=int, default=10,
                    help="diurnal harmonics (regressor width 4*n_har+4)")
    args = ap.parse_args()

    ctx = CalendarContext()
    scen = ScenarioConfig(n_hours=args.hours)
    load, temp, nwp, _truth = generate(scen, ctx)
    k, n_har = args.k, args.n_har
    hours = load.hours()
    eff = effective_matrix(nwp, scen.schedule(), load.start_hour, load.n, k)
    drows = diurnal_matrix(hours + k, ctx, n_har)
    tod = ctx.tod_array(hours + k)
    fixed = ((tod >= 8) & (tod <= 21)).astype(np.float64)
    loadv = np.ascontiguousarray(load.values)
    tempv = np.ascontiguousarray(temp.values)

    rng = np.random.default_rng(0)
    sp_basis = quantile_knots(rng.normal(size=2000), 5)
    sp_coeffs = rng.normal(size=sp_basis.n_basis)
    sp_xs = rng.normal(size=1_000_000)

    def tasks(mod):
        y_obs = mod.lowpass_scan(tempv, 0.6, 0.0, False)
        ft = mod.extend_filtered(y_obs, eff, 0.6, k)
        return {
            "lowpass_scan":
                lambda: mod.lowpass_scan(tempv, 0.6, 0.0, False),
            "extend_filtered":
                lambda: mod.extend_filtered(y_obs, eff, 0.6, k),
            "spline_curve":
                lambda: mod.spline_curve(sp_basis.knots, sp_basis.degree,
                                         sp_coeffs, sp_xs),
            "sweep_horizon":
                lambda: mod.sweep_horizon(loadv, drows, fixed, ft, ft, ft,
                                          k, 0.998, 0.998, n_har, 1, 1e-3),
        }

    results = {}
    for name, mod in (("numpy", backend.numpy_kernels()),
                      ("numba", backend.numba_kernels())):
        for kernel, fn in tasks(mod).items():
            fn()  # warm-up
            results[(kernel, name)] = _median_time(fn, args.repeats)

    width = max(len(name) for name in KERNELS)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for kernel in KERNELS:
        t_np = results[(kernel, "numpy")]
        t_nb = results[(kernel, "numba")]
        print(f"{kernel:<{width}}  {t_np * 1e3:>8.3f}ms  {t_nb * 1e3:>8.3f}ms"
              f"  {t_np / t_nb:>7.1f}x")
    print(f"\nproblem: n={load.n} hours, k={k}, n_har={n_har}, "
          f"spline eval on {sp_xs.size} points; "
          f"median of {args.repeats} runs")


if __name__ == "__main__":
    main()
