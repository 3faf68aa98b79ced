"""Estimators and correction operators for per-channel chirp calibration.

Three estimators are provided: the conventional single-value matched filter,
the sliding-window estimator that resolves errors over frequency, and the
sub-band baseline. Coarse delay compensation and the phase-slope regression
that splits off the sub-sample delay live here too, together with the
correction operators (calibration of a received trace, predistortion of a
transmit trace).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import (
    AlignmentError,
    ConfigError,
    CoverageError,
    EstimationError,
    ParameterError,
)
from .validation import check_fraction, check_same_rate
from .waveform import IqTrace, LfmParams, matched_filter, time_to_freq

# Fraction of the sweep that calibration bins must span (centered) before
# edge clamping is considered safe in apply_calibration / predistort.
MIN_BAND_COVERAGE = 0.8

MIN_WINDOW_LEN = 16


@dataclass(frozen=True)
class ConventionalResult:
    """Single amplitude/phase/delay readout of the full-pulse matched filter."""

    trm_id: int
    amp_db: float
    phase: float
    coarse_delay_samples: int

    def __post_init__(self):
        if not (np.isfinite(self.amp_db) and np.isfinite(self.phase)):
            raise EstimationError("conventional estimate is not finite")


@dataclass(frozen=True)
class SlidingWindowConfig:
    """Window length (processing samples) and overlap ratio of the slider."""

    window_len: int
    overlap_ratio: float

    def __post_init__(self):
        if self.window_len < MIN_WINDOW_LEN:
            raise ConfigError(f"window_len must be >= {MIN_WINDOW_LEN}")
        check_fraction("overlap_ratio", self.overlap_ratio)
        if self.step < 1:
            raise ConfigError("derived step must be >= 1")

    @property
    def step(self) -> int:
        return round(self.window_len * (1.0 - self.overlap_ratio))

    def check_signal_length(self, n: int) -> None:
        if self.window_len > n:
            raise ConfigError(
                f"window_len ({self.window_len}) exceeds signal length ({n})"
            )


@dataclass(frozen=True)
class CalibrationRow:
    """One channel's measured amplitude/phase versus frequency bin.

    ``phase_rad`` is unwrapped across bins (first bin principal value) so it
    interpolates and regresses cleanly.
    """

    trm_id: int
    freq_bins: np.ndarray
    amp_db: np.ndarray
    phase_rad: np.ndarray
    window_len: int = 0
    step: int = 0

    def __post_init__(self):
        fb = np.asarray(self.freq_bins, dtype=float)
        a = np.asarray(self.amp_db, dtype=float)
        p = np.asarray(self.phase_rad, dtype=float)
        if not (fb.shape == a.shape == p.shape) or fb.ndim != 1 or fb.size == 0:
            raise ParameterError("freq_bins, amp_db, phase_rad must be matching 1-D arrays")
        if fb.size > 1 and np.any(np.diff(fb) <= 0):
            raise ParameterError("freq_bins must be strictly ascending")
        for arr in (fb, a, p):
            arr.setflags(write=False)
        object.__setattr__(self, "freq_bins", fb)
        object.__setattr__(self, "amp_db", a)
        object.__setattr__(self, "phase_rad", p)

    @property
    def n_bins(self) -> int:
        return len(self.freq_bins)


@dataclass(frozen=True)
class FreqCalibrationMatrix:
    """Stack of per-channel rows on a common frequency-bin axis."""

    freq_bins: np.ndarray
    trm_ids: np.ndarray
    amp_db: np.ndarray       # (n_trm, n_bins)
    phase_rad: np.ndarray    # (n_trm, n_bins)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        fb = np.asarray(self.freq_bins, dtype=float)
        ids = np.asarray(self.trm_ids, dtype=int)
        a = np.asarray(self.amp_db, dtype=float)
        p = np.asarray(self.phase_rad, dtype=float)
        if np.any(np.diff(fb) <= 0):
            raise ParameterError("freq_bins must be strictly ascending")
        if a.shape != (ids.size, fb.size) or p.shape != a.shape:
            raise ParameterError("amp/phase matrices must be (n_trm, n_bins)")
        object.__setattr__(self, "freq_bins", fb)
        object.__setattr__(self, "trm_ids", ids)
        object.__setattr__(self, "amp_db", a)
        object.__setattr__(self, "phase_rad", p)

    @classmethod
    def from_rows(cls, rows: list[CalibrationRow], reference_trm: int | None = None,
                  metadata: dict | None = None) -> "FreqCalibrationMatrix":
        """Assemble rows measured against the clean chirp; when a reference
        channel is designated, report every row relative to it (the reference
        row becomes identically zero)."""
        if not rows:
            raise ParameterError("need at least one row")
        fb = rows[0].freq_bins
        for r in rows[1:]:
            if r.n_bins != len(fb) or not np.array_equal(r.freq_bins, fb):
                raise ParameterError("rows must share the same frequency bins")
        ids = np.array([r.trm_id for r in rows], dtype=int)
        amp = np.vstack([r.amp_db for r in rows])
        phase = np.vstack([r.phase_rad for r in rows])
        if reference_trm is not None:
            where = np.flatnonzero(ids == reference_trm)
            if where.size != 1:
                raise ParameterError(f"reference TRM {reference_trm} not among rows")
            amp = amp - amp[where[0]]
            phase = phase - phase[where[0]]
        meta = dict(metadata or {})
        meta.setdefault("reference_trm", reference_trm)
        return cls(fb, ids, amp, phase, meta)

    def row(self, trm_id: int) -> CalibrationRow:
        where = np.flatnonzero(self.trm_ids == trm_id)
        if where.size != 1:
            raise ParameterError(f"TRM {trm_id} not in matrix")
        i = int(where[0])
        return CalibrationRow(trm_id, self.freq_bins, self.amp_db[i], self.phase_rad[i],
                              window_len=self.metadata.get("window_len", 0),
                              step=self.metadata.get("step", 0))


@dataclass(frozen=True)
class DelayEstimate:
    """Split delay readout: integer base-rate part plus regressed remainder."""

    trm_id: int
    coarse_samples: int
    precise_seconds: float
    regression_slope: float
    regression_residual_rms: float


class RegressionResult(NamedTuple):
    slope: float              # rad/Hz
    precise_seconds: float
    residual_rms: float       # rad


def conventional_calibrate(received: IqTrace, reference: IqTrace,
                           trm_id: int = 0) -> ConventionalResult:
    """Single-value calibration: amplitude, phase, and lag of the full-pulse
    matched-filter peak."""
    check_same_rate(received, reference)
    if not np.any(received.samples):
        raise EstimationError("received trace is identically zero")
    lag, peak = matched_filter(received, reference)
    if peak == 0:
        raise EstimationError("matched-filter peak is zero")
    return ConventionalResult(trm_id, float(20.0 * np.log10(np.abs(peak))),
                              float(np.angle(peak)), lag)


def _integer_shift(x: np.ndarray, shift: int) -> np.ndarray:
    """Shift right by ``shift`` samples (left when negative), zero-filling."""
    out = np.zeros_like(x)
    if shift > 0:
        out[shift:] = x[:-shift]
    elif shift < 0:
        out[:shift] = x[-shift:]
    else:
        out[:] = x
    return out


def coarse_delay_compensate(received: IqTrace, reference: IqTrace, *,
                            decimation: int = 1) -> tuple[IqTrace, int]:
    """Remove the integer base-rate-sample part of the channel delay.

    The matched-filter lag (processing-rate samples) is rounded to the
    nearest multiple of ``decimation`` — one base-rate sample — and the trace
    is shifted back by that amount. Returns the aligned trace and the shift
    in base-rate samples; residual misalignment is below one base period.
    """
    check_same_rate(received, reference)
    lag, _ = matched_filter(received, reference)
    if abs(lag) > len(received) // 2:
        raise AlignmentError(
            f"matched-filter lag {lag} exceeds half the trace length; "
            "cannot trust coarse alignment"
        )
    coarse_samples = round(lag / decimation)
    if coarse_samples == 0:
        return received, 0
    shifted = _integer_shift(received.samples, -coarse_samples * decimation)
    return IqTrace(shifted, received.rate, received.t0), coarse_samples


def sliding_window_calibrate(received: IqTrace, reference: IqTrace,
                             cfg: SlidingWindowConfig, params: LfmParams, *,
                             trm_id: int = 0, skip_head: int = 0,
                             skip_tail: int = 0) -> CalibrationRow:
    """Measure amplitude/phase per frequency by matched-filtering successive
    chirp segments.

    The received trace must already be coarse-compensated, so each window is
    read at zero lag: a reference-energy-normalized inner product of the
    like-indexed segments. Each window reports at the instantaneous frequency
    of its center time. ``skip_head``/``skip_tail`` exclude samples corrupted
    by the zero-filled shift transient from the statistics.
    """
    check_same_rate(received, reference)
    n = len(reference)
    if len(received) != n:
        raise ConfigError("received and reference must have equal length")
    cfg.check_signal_length(n)

    first = int(np.ceil(skip_head / cfg.step)) * cfg.step if skip_head > 0 else 0
    last = n - skip_tail - cfg.window_len
    starts = np.arange(first, last + 1, cfg.step, dtype=int)
    if starts.size == 0:
        raise ConfigError("no complete windows fit the usable signal span")

    # plain contiguous slices so a full-length window reproduces the
    # matched-filter peak evaluation bit for bit
    rec = received.samples
    ref = reference.samples
    peaks = np.empty(starts.size, dtype=np.complex128)
    for i, p in enumerate(starts):
        seg = slice(p, p + cfg.window_len)
        peaks[i] = np.sum(rec[seg] * np.conj(ref[seg])) / np.sum(np.abs(ref[seg]) ** 2)

    centers = (starts + cfg.window_len / 2.0) / received.rate
    freqs = np.asarray(time_to_freq(params, centers))
    amp_db = 20.0 * np.log10(np.abs(peaks))
    phase = np.unwrap(np.angle(peaks))
    return CalibrationRow(trm_id, freqs, amp_db, phase,
                          window_len=cfg.window_len, step=cfg.step)


def subband_calibrate(received: IqTrace, reference: IqTrace, n_bands: int,
                      params: LfmParams, *, trm_id: int = 0,
                      skip_head: int = 0, skip_tail: int = 0) -> CalibrationRow:
    """Sub-band baseline: contiguous non-overlapping segments, one readout per
    band. Identical to a zero-overlap slider with window ``n // n_bands``."""
    n = len(reference)
    if n_bands < 1:
        raise ConfigError("n_bands must be >= 1")
    if n_bands > n // MIN_WINDOW_LEN:
        raise ConfigError(
            f"n_bands ({n_bands}) leaves segments shorter than {MIN_WINDOW_LEN} samples"
        )
    cfg = SlidingWindowConfig(window_len=n // n_bands, overlap_ratio=0.0)
    return sliding_window_calibrate(received, reference, cfg, params,
                                    trm_id=trm_id, skip_head=skip_head,
                                    skip_tail=skip_tail)


def precise_delay_regression(freqs, phases_rad) -> RegressionResult:
    """Least-squares line through unwrapped phase vs frequency; the slope maps
    to the sub-sample delay as ``tau = -slope / (2*pi)``."""
    f = np.asarray(freqs, dtype=float)
    p = np.asarray(phases_rad, dtype=float)
    if f.size < 3 or f.shape != p.shape:
        raise EstimationError("need at least 3 (freq, phase) bins to regress")
    p = np.unwrap(p)
    slope, intercept = np.polyfit(f, p, 1)
    residuals = p - (slope * f + intercept)
    return RegressionResult(float(slope), float(-slope / (2.0 * np.pi)),
                            float(np.sqrt(np.mean(residuals ** 2))))


def _row_splines(row: CalibrationRow, params: LfmParams):
    lo, hi = row.freq_bins[0], row.freq_bins[-1]
    margin = (1.0 - MIN_BAND_COVERAGE) / 2.0 * params.bw
    if lo > -params.bw / 2 + margin or hi < params.bw / 2 - margin:
        raise CoverageError(
            f"calibration bins span [{lo:.4g}, {hi:.4g}] Hz but must cover at "
            f"least the central {MIN_BAND_COVERAGE:.0%} of the +-{params.bw / 2:.4g} Hz band"
        )
    amp = CubicSpline(row.freq_bins, row.amp_db, bc_type="natural")
    phase = CubicSpline(row.freq_bins, row.phase_rad, bc_type="natural")
    return (lambda f: amp(np.clip(f, lo, hi)),
            lambda f: phase(np.clip(f, lo, hi)))


def apply_calibration(x: IqTrace, row: CalibrationRow, params: LfmParams) -> IqTrace:
    """Correct a coarse-compensated received trace with a measured row:
    divide by the interpolated amplitude, rotate out the interpolated phase,
    both evaluated at the instantaneous frequency of each sample."""
    amp_of, phase_of = _row_splines(row, params)
    f = np.asarray(time_to_freq(params, np.clip(x.times(), 0.0, params.pulse_width)))
    corr = 10.0 ** (-amp_of(f) / 20.0) * np.exp(-1j * phase_of(f))
    return IqTrace(x.samples * corr, x.rate, x.t0)


def predistort(reference: IqTrace, row: CalibrationRow, params: LfmParams) -> IqTrace:
    """Pre-compensate the transmit waveform so the modeled channel emits the
    ideal chirp: the channel multiplies by the measured error, so the transmit
    trace is divided by it — the same correction as :func:`apply_calibration`,
    applied before the channel instead of after."""
    return apply_calibration(reference, row, params)
