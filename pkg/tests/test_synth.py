"""Synthetic scenario generator: determinism, ground-truth consistency,
weather-forecast structure, gap injection, and scenario files."""

import numpy as np
import pytest

from coldcast import (
    HourlySeries,
    ParameterError,
    ParseError,
    ScenarioConfig,
    generate,
    inject_gaps,
    parse_timestamp,
    read_scenario,
    to_epoch_hours,
    write_scenario,
)


class TestDeterminism:
    def test_same_seed_bitwise_identical(self, ctx):
        cfg = ScenarioConfig(n_hours=400)
        a = generate(cfg, ctx)
        b = generate(cfg, ctx)
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[1].values, b[1].values)
        assert np.array_equal(a[2].issue_hours, b[2].issue_hours)
        assert np.array_equal(a[2].values, b[2].values)
        for field in ("regime", "temp_true", "f_temp", "clean_load"):
            assert np.array_equal(getattr(a[3], field), getattr(b[3], field))

    def test_seed_changes_everything(self, ctx):
        a = generate(ScenarioConfig(n_hours=300, seed=1), ctx)
        b = generate(ScenarioConfig(n_hours=300, seed=2), ctx)
        assert not np.array_equal(a[0].values, b[0].values)
        assert not np.array_equal(a[1].values, b[1].values)
        assert not np.array_equal(a[2].values, b[2].values)


class TestRecordStructure:
    def test_series_metadata(self, world, ctx):
        cfg = world.config
        assert world.load.n == cfg.n_hours
        assert world.temp.n == cfg.n_hours
        assert world.load.start == parse_timestamp(cfg.start)
        assert world.load.start == world.temp.start
        assert world.load.units == "kW"
        assert world.temp.units == "degC"
        assert not world.load.gap_mask.any()

    def test_truth_arrays_co_registered(self, world):
        n = world.load.n
        t = world.truth
        assert (t.regime.shape == t.temp_true.shape == t.f_temp.shape
                == t.clean_load.shape == (n,))
        assert t.regime.dtype == np.int8
        assert np.array_equal(t.temp_true, world.temp.values)

    def test_regime_is_the_opening_window(self, world, ctx):
        tod = ctx.tod_array(world.load.hours())
        cfg = world.config
        want = ((tod >= cfg.open_hour) & (tod < cfg.close_hour)).astype(np.int8)
        assert np.array_equal(world.truth.regime, want)
        # closing hour itself is closed, opening hour itself is open
        assert world.truth.regime[tod == cfg.close_hour].sum() == 0
        assert world.truth.regime[tod == cfg.open_hour].all()


class TestGenerativeRecursions:
    def test_filtered_temperature_recursion(self, world):
        """f_t = a f_{t-1} + (1-a) T_t holds exactly inside the record."""
        a = world.config.a_gen
        f = world.truth.f_temp
        want = a * f[:-1] + (1.0 - a) * world.temp.values[1:]
        assert np.array_equal(f[1:], want)

    def test_filter_is_warmed_up_before_the_record(self, world):
        # the recursion started nwp_lead_back_hours earlier, so the first
        # record value is already a blend, not the raw first temperature
        assert world.truth.f_temp[0] != world.temp.values[0]

    def test_unfiltered_when_generative_smoothing_off(self, ctx):
        cfg = ScenarioConfig(n_hours=200, a_gen=0.0)
        _, temp, _, truth = generate(cfg, ctx)
        assert np.array_equal(truth.f_temp, temp.values)

    def test_clean_load_reconstruction(self, world, ctx):
        """Rebuild the noise-free load from the truth fields alone."""
        cfg = world.config
        tod = ctx.tod_array(world.load.hours())
        regime = world.truth.regime.astype(bool)
        workday = ctx.workday_array(world.load.hours())
        width = cfg.close_hour - cfg.open_hour
        phase = (tod + 0.5 - cfg.open_hour) / width
        bump = np.where(regime, np.sin(np.pi * np.clip(phase, 0.0, 1.0)), 0.0)
        amp = np.where(workday, cfg.amp_workday, cfg.amp_weekend)
        base = np.where(regime, cfg.base_open, cfg.base_close)
        scale = np.where(regime, cfg.slope_scale_open, 1.0)
        f = world.truth.f_temp
        temp_term = (cfg.slope * (f - cfg.temp_ref)
                     + cfg.kink_extra_slope
                     * np.maximum(0.0, f - cfg.kink_temp))
        defrost = np.where(np.isin(tod, (6.0, 20.0)), cfg.defrost_kw, 0.0)
        want = base + amp * bump + scale * temp_term + defrost
        assert np.allclose(world.truth.clean_load, want, atol=1e-12)

    def test_defrost_knob_only_moves_its_two_hours(self, ctx):
        base_cfg = ScenarioConfig(n_hours=300)
        no_defrost = ScenarioConfig(n_hours=300, defrost_kw=0.0)
        _, _, _, truth_a = generate(base_cfg, ctx)
        _, _, _, truth_b = generate(no_defrost, ctx)
        diff = truth_a.clean_load - truth_b.clean_load
        tod = ctx.tod_array(np.arange(to_epoch_hours(
            parse_timestamp(base_cfg.start)),
            to_epoch_hours(parse_timestamp(base_cfg.start)) + 300))
        spike = np.isin(tod, (6.0, 20.0))
        assert np.allclose(diff[spike], base_cfg.defrost_kw)
        assert np.allclose(diff[~spike], 0.0)

    def test_load_noise_is_autocorrelated(self, world):
        noise = world.load.values - world.truth.clean_load
        r1 = np.corrcoef(noise[:-1], noise[1:])[0, 1]
        assert abs(r1 - world.config.noise_phi) < 0.1


class TestWeatherForecasts:
    def test_issue_cadence_and_lead_in(self, world):
        cfg = world.config
        h0 = to_epoch_hours(parse_timestamp(cfg.start))
        issues = world.nwp.issue_hours
        period = 24 // cfg.issues_per_day
        assert np.all(np.diff(issues) == period)
        assert issues[0] == h0 - cfg.nwp_lead_back_hours
        assert issues[-1] < h0 + cfg.n_hours
        assert world.nwp.values.shape == (issues.shape[0], cfg.nwp_k_max)

    def _record_errors(self, world, col):
        """Forecast-minus-truth for column col, on targets inside the record."""
        cfg = world.config
        h0 = to_epoch_hours(parse_timestamp(cfg.start))
        errs = []
        for i, ih in enumerate(world.nwp.issue_hours):
            target = int(ih) + 1 + col
            if h0 <= target < h0 + cfg.n_hours:
                errs.append(world.nwp.values[i, col]
                            - world.truth.temp_true[target - h0])
        return np.array(errs)

    def test_bias_is_planted(self, world):
        errs = np.concatenate([self._record_errors(world, c)
                               for c in (0, 10, 30)])
        assert abs(errs.mean() - world.config.nwp_bias) < 0.5

    def test_error_grows_with_lead_time(self, world):
        s0 = self._record_errors(world, 0).std()
        s40 = self._record_errors(world, 40).std()
        assert s0 < s40
        # short-lead accuracy is close to the planted issue-time error
        assert s0 == pytest.approx(world.config.nwp_err0, rel=0.5)

    def test_every_record_hour_is_covered(self, world, schedule):
        from coldcast import effective_matrix
        eff = effective_matrix(world.nwp, schedule, world.load.start_hour,
                               world.load.n, 42)
        assert np.isfinite(eff).all()


class TestInjectGaps:
    def test_marks_values_and_mask(self, ctx):
        s = HourlySeries(parse_timestamp("2012-05-01T00:00:00Z"),
                         np.arange(48.0))
        out = inject_gaps(s, [(5, 3), (40, 2)])
        assert np.isnan(out.values[5:8]).all()
        assert out.gap_mask[5:8].all()
        assert np.isnan(out.values[40:42]).all()
        keep = np.ones(48, bool)
        keep[5:8] = keep[40:42] = False
        assert np.array_equal(out.values[keep], s.values[keep])
        assert not out.gap_mask[keep].any()

    def test_original_untouched(self):
        s = HourlySeries(parse_timestamp("2012-05-01T00:00:00Z"),
                         np.arange(30.0))
        inject_gaps(s, [(0, 10)])
        assert np.isfinite(s.values).all()
        assert not s.gap_mask.any()

    def test_bounds_validated(self):
        s = HourlySeries(parse_timestamp("2012-05-01T00:00:00Z"),
                         np.arange(30.0))
        with pytest.raises(ParameterError, match="outside"):
            inject_gaps(s, [(25, 6)])
        with pytest.raises(ParameterError, match="outside"):
            inject_gaps(s, [(-1, 2)])
        with pytest.raises(ParameterError, match=">= 1"):
            inject_gaps(s, [(3, 0)])


class TestScenarioConfigValidation:
    def test_bad_values_rejected(self):
        with pytest.raises(ParameterError, match="n_hours"):
            ScenarioConfig(n_hours=0)
        with pytest.raises(ParameterError, match="close_hour"):
            ScenarioConfig(open_hour=23, close_hour=7)
        with pytest.raises(ParameterError, match="a_gen"):
            ScenarioConfig(a_gen=1.0)
        with pytest.raises(ParameterError, match="noise_sigma"):
            ScenarioConfig(noise_sigma=-0.1)

    def test_midnight_to_midnight_window_allowed(self):
        cfg = ScenarioConfig(open_hour=0, close_hour=24)
        assert cfg.close_hour == 24


class TestScenarioFiles:
    def test_roundtrip(self, tmp_path):
        cfg = ScenarioConfig(n_hours=123, seed=9, a_gen=0.35,
                             nwp_bias=-1.25, start="2013-01-02T00:00:00+00:00")
        path = tmp_path / "scenario.cfg"
        write_scenario(cfg, path)
        assert read_scenario(path) == cfg

    def test_defaults_roundtrip(self, tmp_path):
        path = tmp_path / "default.cfg"
        write_scenario(ScenarioConfig(), path)
        assert read_scenario(path) == ScenarioConfig()

    def test_partial_file_fills_defaults(self, tmp_path):
        path = tmp_path / "partial.cfg"
        path.write_text("# just two overrides\n\nn_hours = 99\nseed = 4\n")
        cfg = read_scenario(path)
        assert cfg.n_hours == 99 and cfg.seed == 4
        assert cfg.a_gen == ScenarioConfig().a_gen

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_hour = 99\n")
        with pytest.raises(ParseError, match="unknown scenario key"):
            read_scenario(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "bad2.cfg"
        path.write_text("n_hours = soon\n")
        with pytest.raises(ParseError, match="line 1"):
            read_scenario(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = tmp_path / "bad3.cfg"
        path.write_text("n_hours 99\n")
        with pytest.raises(ParseError, match="key = value"):
            read_scenario(path)
