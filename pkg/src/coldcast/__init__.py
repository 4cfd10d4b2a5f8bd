"""Adaptive hourly load forecasting for supermarket refrigeration.

Forecasts 1-42 hours ahead with recursive least squares under exponential
forgetting, a Fourier diurnal curve split by workday/weekend, regime
switching between opening and closing hours, low-pass-filtered ambient
temperature (observations spliced with weather forecasts), and an optional
offline B-spline first stage capturing the nonlinear temperature response.
"""

from coldcast import errors
from coldcast.backend import active_backend
from coldcast.errors import (
    AvailabilityError,
    BasisError,
    CalibrationError,
    ColdcastError,
    ConditioningError,
    ConfigurationError,
    CsvError,
    DegenerateSeriesError,
    DimensionError,
    DuplicateHourError,
    EvaluationError,
    FitError,
    GapRepairError,
    ObjectiveError,
    OrderingError,
    ParameterError,
    ParseError,
)
from coldcast.basis import (
    LowPassFilter,
    SplineBasis,
    diurnal_matrix,
    diurnal_row,
    lowpass_apply,
    quantile_knots,
    spline_row,
)
from coldcast.evaluate import (
    AcfResult,
    DistributionSummary,
    RmseCurve,
    acf,
    distribution_summary,
    normal_ppf,
    rmse_per_horizon,
)
from coldcast.forecaster import (
    ForecastRun,
    ModelConfig,
    NoiseModel,
    RegimePredictor,
    SplineStage,
    build_regressor,
    fit_spline_stage,
    fixed_regime_indicator,
    load_spline_stage,
    noise_fit_apply,
    predict_regime,
    run_forecast,
    save_spline_stage,
)
from coldcast.optimize import (
    HorizonObjective,
    OptimizationResult,
    grid_search_noise_lambda,
    optimize_all,
    optimize_horizon,
)
from coldcast.rls import (
    RlsState,
    forgetting_weight,
    load_state,
    rls_predict,
    rls_update,
    save_state,
)
from coldcast.series import (
    CalendarContext,
    HourlySeries,
    from_epoch_hours,
    ingest_csv,
    parse_timestamp,
    repair_gaps,
    time_of_day,
    to_epoch_hours,
    write_csv,
)
from coldcast.synth import (
    ScenarioConfig,
    SimTruth,
    generate,
    inject_gaps,
    read_scenario,
    write_scenario,
)
from coldcast.weather import (
    HorizonMatrix,
    NwpSchedule,
    calibrate_nwp,
    combine_series,
    effective_matrix,
    latest_available_forecast,
    read_horizon_csv,
    write_horizon_csv,
)

__version__ = "0.1.0"
