"""Shared fixtures: one synthetic world, calibrated once, forecast once.

The heavy artifacts (scenario data, calibration, full three-model forecast
runs) are session-scoped so the acceptance tests and the unit tests reuse
the same objects instead of regenerating them per test.
"""

import types

import numpy as np
import pytest

import coldcast as cc
from coldcast.basis import LowPassFilter


@pytest.fixture(scope="session")
def ctx():
    return cc.CalendarContext()


@pytest.fixture(scope="session")
def schedule():
    return cc.NwpSchedule()


@pytest.fixture(scope="session")
def world(ctx):
    """Default synthetic scenario: load, temperature, raw NWP, ground truth."""
    config = cc.ScenarioConfig()
    load, temp, nwp, truth = cc.generate(config, ctx)
    return types.SimpleNamespace(config=config, load=load, temp=temp,
                                 nwp=nwp, truth=truth)


@pytest.fixture(scope="session")
def calibrated(world):
    return cc.calibrate_nwp(world.nwp, world.temp)


@pytest.fixture(scope="session")
def linear_runs(world, calibrated, schedule, ctx):
    """Full-record forecast runs for the two linear models."""
    out = {}
    for kind in ("fix_lin", "var_lin"):
        config = cc.ModelConfig(kind=kind)
        out[kind] = cc.run_forecast(config, world.load, world.temp,
                                    calibrated, schedule, ctx)
    return out


@pytest.fixture(scope="session")
def spline_stage(world, linear_runs):
    """Per-regime temperature response fitted with adaptively predicted
    regime labels (one-step predictions shifted onto their target hours)."""
    rg1 = linear_runs["var_lin"].regimes.values[:, 0]
    labels = np.empty(world.load.n, dtype=np.int8)
    labels[1:] = rg1[:-1]
    labels[0] = labels[1]
    ft = LowPassFilter(0.6).apply(world.temp.values)
    return cc.fit_spline_stage(world.load, ft, labels)


@pytest.fixture(scope="session")
def three_runs(world, calibrated, schedule, ctx, linear_runs, spline_stage):
    """fix_lin, var_lin, and var_nonlin runs over the same record."""
    config = cc.ModelConfig(kind="var_nonlin")
    nonlin = cc.run_forecast(config, world.load, world.temp, calibrated,
                             schedule, ctx, spline_stage=spline_stage)
    return {**linear_runs, "var_nonlin": nonlin}
