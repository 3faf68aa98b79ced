"""Scikit-learn style estimators wrapping the calibration operations.

Each calibrator learns a channel's error from ``fit(received, reference)``
and removes it with ``transform``; ``get_params`` / ``set_params`` /
``clone`` work through the standard sklearn machinery, so the estimators
drop into pipelines and parameter sweeps.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .calibration import (
    CalibrationRow,
    SlidingWindowConfig,
    apply_calibration,
    conventional_calibrate,
    precise_delay_regression,
    predistort,
    sliding_window_calibrate,
    subband_calibrate,
)
from .exceptions import ParameterError
from .waveform import IqTrace, LfmParams


def _require_trace(x, name: str) -> IqTrace:
    if not isinstance(x, IqTrace):
        raise ParameterError(f"{name} must be an IqTrace")
    return x


class ConventionalCalibrator(BaseEstimator, TransformerMixin):
    """Single-value calibrator: one amplitude, phase, and lag per channel."""

    def __init__(self, params: LfmParams | None = None):
        self.params = params

    def fit(self, X, y=None):
        received = _require_trace(X, "X")
        reference = _require_trace(y, "y (reference trace)")
        result = conventional_calibrate(received, reference)
        self.amp_db_ = result.amp_db
        self.phase_rad_ = result.phase
        self.coarse_delay_samples_ = result.coarse_delay_samples
        return self

    def _check_fitted(self):
        if not hasattr(self, "amp_db_"):
            raise NotFittedError("call fit(received, reference) first")

    def transform(self, X) -> IqTrace:
        self._check_fitted()
        x = _require_trace(X, "X")
        corr = 10.0 ** (-self.amp_db_ / 20.0) * np.exp(-1j * self.phase_rad_)
        return IqTrace(x.samples * corr, x.rate, x.t0)


class SlidingWindowCalibrator(BaseEstimator, TransformerMixin):
    """Frequency-resolved calibrator built on the sliding matched filter."""

    def __init__(self, params: LfmParams | None = None, window_len: int = 500,
                 overlap_ratio: float = 0.85, skip_head: int = 0,
                 skip_tail: int = 0):
        self.params = params
        self.window_len = window_len
        self.overlap_ratio = overlap_ratio
        self.skip_head = skip_head
        self.skip_tail = skip_tail

    def _params(self) -> LfmParams:
        if self.params is None:
            raise ParameterError("params (LfmParams) must be set before use")
        return self.params

    def fit(self, X, y=None):
        received = _require_trace(X, "X")
        reference = _require_trace(y, "y (reference trace)")
        cfg = SlidingWindowConfig(self.window_len, self.overlap_ratio)
        row = sliding_window_calibrate(received, reference, cfg, self._params(),
                                       skip_head=self.skip_head,
                                       skip_tail=self.skip_tail)
        self.freq_bins_ = row.freq_bins
        self.amp_db_ = row.amp_db
        self.phase_rad_ = row.phase_rad
        self.row_ = row
        regression = precise_delay_regression(row.freq_bins, row.phase_rad)
        self.delay_slope_ = regression.slope
        self.precise_delay_ = regression.precise_seconds
        self.delay_residual_rms_ = regression.residual_rms
        return self

    def _check_fitted(self):
        if not hasattr(self, "row_"):
            raise NotFittedError("call fit(received, reference) first")

    def transform(self, X) -> IqTrace:
        self._check_fitted()
        return apply_calibration(_require_trace(X, "X"), self.row_, self._params())

    def predistort(self, X) -> IqTrace:
        """Pre-compensate a transmit trace with the fitted row."""
        self._check_fitted()
        return predistort(_require_trace(X, "X"), self.row_, self._params())


class SubbandCalibrator(BaseEstimator, TransformerMixin):
    """Sub-band baseline calibrator: one readout per contiguous segment."""

    def __init__(self, params: LfmParams | None = None, n_bands: int = 20,
                 skip_head: int = 0, skip_tail: int = 0):
        self.params = params
        self.n_bands = n_bands
        self.skip_head = skip_head
        self.skip_tail = skip_tail

    def _params(self) -> LfmParams:
        if self.params is None:
            raise ParameterError("params (LfmParams) must be set before use")
        return self.params

    def fit(self, X, y=None):
        received = _require_trace(X, "X")
        reference = _require_trace(y, "y (reference trace)")
        row = subband_calibrate(received, reference, self.n_bands, self._params(),
                                skip_head=self.skip_head, skip_tail=self.skip_tail)
        self.freq_bins_ = row.freq_bins
        self.amp_db_ = row.amp_db
        self.phase_rad_ = row.phase_rad
        self.row_ = row
        return self

    def _check_fitted(self):
        if not hasattr(self, "row_"):
            raise NotFittedError("call fit(received, reference) first")

    def transform(self, X) -> IqTrace:
        self._check_fitted()
        return apply_calibration(_require_trace(X, "X"), self.row_, self._params())
