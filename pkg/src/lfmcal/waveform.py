"""Chirp synthesis, sub-sample delay, and matched-filter primitives.

All signals are complex baseband (carrier removed); phases are radians.
Everything here is a pure function of its arguments and all returned
containers are frozen, so traces can be shared freely across workers.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import correlate, correlation_lags, upfirdn

from .exceptions import (
    ContractError,
    DomainError,
    ParameterError,
    QuantizationError,
)
from .validation import as_complex_samples, check_positive

# Interpolation kernel constants: windowed sinc with KERNEL_HALF_WIDTH lobes
# on each side of center. Kaiser beta 8.6 keeps images > 80 dB down, well past
# the 60 dB floor the resampler must guarantee.
KERNEL_HALF_WIDTH = 32
KERNEL_BETA = 8.6


@dataclass(frozen=True)
class LfmParams:
    """Chirp definition: sweep, duration, and the two sample rates.

    ``proc_rate`` is the processing (oversampled) rate the simulation runs at;
    ``base_rate`` is the ADC-equivalent rate whose period defines the coarse
    delay grid. ``proc_rate`` must be an integer multiple of ``base_rate``.
    """

    f0: float
    bw: float
    pulse_width: float
    proc_rate: float
    base_rate: float

    def __post_init__(self):
        check_positive("bw", self.bw)
        check_positive("pulse_width", self.pulse_width)
        check_positive("proc_rate", self.proc_rate)
        check_positive("base_rate", self.base_rate)
        if self.f0 <= self.bw / 2:
            raise ParameterError(
                f"f0 ({self.f0}) must exceed half the bandwidth ({self.bw / 2})"
            )
        ratio = self.proc_rate / self.base_rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ParameterError(
                f"proc_rate must be an integer multiple of base_rate "
                f"(got ratio {ratio})"
            )
        if self.proc_rate <= self.bw:
            raise ParameterError(
                f"proc_rate ({self.proc_rate}) must exceed the bandwidth "
                f"({self.bw}) for complex-baseband sampling"
            )

    @property
    def n_samples(self) -> int:
        return round(self.pulse_width * self.proc_rate)

    @property
    def decimation(self) -> int:
        """Processing samples per base-rate sample."""
        return round(self.proc_rate / self.base_rate)

    @property
    def base_period(self) -> float:
        return 1.0 / self.base_rate

    @property
    def chirp_rate(self) -> float:
        """Quadratic-phase coefficient; instantaneous frequency sweeps
        exactly ``bw`` over the pulse."""
        return self.bw / (2.0 * self.pulse_width)


@dataclass(frozen=True)
class IqTrace:
    """A finite complex baseband sample sequence at a fixed rate."""

    samples: np.ndarray
    rate: float
    t0: float = 0.0

    def __post_init__(self):
        arr = as_complex_samples(self.samples)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        check_positive("rate", self.rate)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.rate

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.samples)) / self.rate


def generate_lfm(params: LfmParams) -> IqTrace:
    """Synthesize the unit-amplitude baseband chirp at the processing rate.

    The instantaneous baseband frequency sweeps linearly from ``-bw/2`` at
    t = 0 to ``+bw/2`` at t = ``pulse_width``.
    """
    n = params.n_samples
    t = np.arange(n) / params.proc_rate
    phase = 2.0 * np.pi * (-0.5 * params.bw * t + params.chirp_rate * t * t)
    return IqTrace(np.exp(1j * phase), params.proc_rate)


def _baseband_freq(params: LfmParams, t) -> np.ndarray:
    """Unchecked linear time-to-frequency map (internal)."""
    return -params.bw / 2.0 + (params.bw / params.pulse_width) * np.asarray(t)


def time_to_freq(params: LfmParams, t):
    """Instantaneous baseband frequency at pulse time ``t`` (seconds)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > params.pulse_width):
        raise DomainError(f"t must lie in [0, {params.pulse_width}]")
    out = _baseband_freq(params, t_arr)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def freq_to_time(params: LfmParams, f):
    """Inverse of :func:`time_to_freq`."""
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr < -params.bw / 2) or np.any(f_arr > params.bw / 2):
        raise DomainError(f"f must lie in [-{params.bw / 2}, {params.bw / 2}]")
    out = (f_arr + params.bw / 2.0) * params.pulse_width / params.bw
    return float(out) if np.isscalar(f) or f_arr.ndim == 0 else out


def narrowband_check(bw: float, tau_sig: float) -> bool:
    """True iff the bandwidth-duration product permits phase-only steering."""
    check_positive("bw", bw)
    check_positive("tau_sig", tau_sig)
    return bw * tau_sig <= 1.0


@functools.lru_cache(maxsize=8)
def _interp_kernel(up: int, half: int = KERNEL_HALF_WIDTH,
                   beta: float = KERNEL_BETA) -> np.ndarray:
    """Windowed-sinc interpolation kernel for integer upsampling by ``up``.

    Zeros on the original sample grid are forced exactly so that the
    oversample-then-decimate path is the bit-exact identity at zero delay.
    """
    n = np.arange(-half * up, half * up + 1)
    h = np.sinc(n / up) * np.kaiser(2 * half * up + 1, beta)
    center = half * up
    h[center + up::up] = 0.0
    h[center - up::-up] = 0.0
    h[center] = 1.0
    h.setflags(write=False)
    return h


def apply_delay(x: IqTrace, delay: float, oversample_factor: int) -> IqTrace:
    """Delay a trace by a sub-sample amount via oversample / shift / decimate.

    ``delay`` must be an integer multiple of ``1 / (rate * oversample_factor)``;
    anything else raises :class:`QuantizationError` so the caller is forced to
    pick a representable value. Positive delays zero-fill the leading edge,
    negative delays the trailing edge. Output length and rate match the input.
    """
    if oversample_factor < 1 or int(oversample_factor) != oversample_factor:
        raise ParameterError("oversample_factor must be a positive integer")
    up = int(oversample_factor)
    if abs(delay) >= x.duration:
        raise DomainError(
            f"|delay| ({abs(delay)} s) must be below the trace duration "
            f"({x.duration} s)"
        )
    shift_f = delay * x.rate * up
    shift = round(shift_f)
    if abs(shift_f - shift) > 1e-6:
        grid = 1.0 / (x.rate * up)
        raise QuantizationError(
            f"delay {delay} s is not a multiple of the oversampled grid "
            f"({grid} s); nearest representable is {shift * grid} s"
        )
    if shift == 0:
        return IqTrace(x.samples.copy(), x.rate, x.t0)

    h = _interp_kernel(up)
    group_delay = (len(h) - 1) // 2
    y_up = upfirdn(h, x.samples, up=up, down=1)

    n = len(x.samples)
    pos = np.arange(n) * up - shift
    valid = (pos >= 0) & (pos <= (n - 1) * up)
    out = np.zeros(n, dtype=np.complex128)
    out[valid] = y_up[group_delay + pos[valid]]
    return IqTrace(out, x.rate, x.t0)


class MatchedFilterPeak(NamedTuple):
    lag: int
    peak: complex


def matched_filter(received: IqTrace, reference: IqTrace) -> MatchedFilterPeak:
    """Locate and read the peak of the full cross-correlation.

    The correlation is normalized by the reference energy, so feeding the
    reference back in yields ``(0, 1+0j)``. The peak value is re-evaluated as
    a direct inner product at the argmax lag; this keeps it numerically
    identical to the windowed zero-lag measurements used elsewhere.
    """
    from .validation import check_same_rate

    check_same_rate(received, reference)
    ref = reference.samples
    rec = received.samples
    energy = float(np.sum(np.abs(ref) ** 2))
    if energy == 0.0:
        raise ContractError("reference has zero energy")

    corr = correlate(rec, ref, mode="full", method="fft")
    lags = correlation_lags(len(rec), len(ref), mode="full")
    lag = int(lags[int(np.argmax(np.abs(corr)))])

    # direct re-evaluation at the winning lag for full precision; keep the
    # numpy scalar so magnitude/phase reads match windowed measurements bitwise
    lo = max(lag, 0)
    hi = min(len(rec), len(ref) + lag)
    peak = np.sum(rec[lo:hi] * np.conj(ref[lo - lag:hi - lag])) / energy
    return MatchedFilterPeak(lag, peak)
