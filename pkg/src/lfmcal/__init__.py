"""Sliding-window matched-filter calibration of wideband LFM phased arrays.

The package simulates per-channel frequency-dependent amplitude/phase errors
and sub-sample delays on a wideband chirp, recovers them with conventional,
sliding-window, and sub-band estimators, and evaluates the downstream effect
on steered beampatterns.
"""

from .beamforming import (
    ArrayConfig,
    Beampattern,
    PatternMetrics,
    SteeringWeights,
    beampattern,
    pattern_metrics,
    steering_weights,
)
from .calibration import (
    CalibrationRow,
    ConventionalResult,
    DelayEstimate,
    FreqCalibrationMatrix,
    SlidingWindowConfig,
    apply_calibration,
    coarse_delay_compensate,
    conventional_calibrate,
    precise_delay_regression,
    predistort,
    sliding_window_calibrate,
    subband_calibrate,
)
from .errormodel import (
    ErrorCurve,
    TrmErrorModel,
    gen_random_curve,
    inject_errors,
    load_error_models,
    make_error_model,
    save_error_models,
)
from .estimators import (
    ConventionalCalibrator,
    SlidingWindowCalibrator,
    SubbandCalibrator,
)
from .exceptions import (
    AlignmentError,
    ConfigError,
    ContractError,
    CoverageError,
    DomainError,
    EstimationError,
    LfmCalError,
    ManifestError,
    MetricError,
    ParameterError,
    QuantizationError,
)
from .scenarios import (
    ScenarioConfig,
    builtin_scenario,
    builtin_scenario_names,
    compare_methods,
    config_from_dict,
    run_scenario,
    verify_manifest,
)
from .waveform import (
    IqTrace,
    LfmParams,
    MatchedFilterPeak,
    apply_delay,
    freq_to_time,
    generate_lfm,
    matched_filter,
    narrowband_check,
    time_to_freq,
)

__version__ = "0.1.0"
