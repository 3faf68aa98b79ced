"""Frequency-resolved beampatterns for a hybrid TTD / phase-shifter array.

The array is a uniform line of ``n_trm`` elements split into ``n_ttd``
contiguous subarrays. Each subarray gets one true-time-delay setting (at its
phase center, quantized to the TTD quantum); each element gets a phase-shifter
setting that absorbs the intra-subarray residual at the carrier, quantized to
the shifter's bit depth. Patterns are evaluated per absolute frequency so the
squint of the hybrid architecture is visible across the sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, MetricError, ParameterError
from .validation import check_positive

SPEED_OF_LIGHT = 299792458.0


@dataclass(frozen=True)
class ArrayConfig:
    """Array geometry and weight quantization.

    ``spacing`` of ``None`` resolves to half a wavelength at the steering
    carrier. ``ttd_quantum`` / ``phase_shifter_bits`` of ``None`` disable the
    respective quantization (ideal hardware).
    """

    n_trm: int = 64
    n_ttd: int = 8
    spacing: float | None = None
    steer_angle: float = -35.0
    ttd_quantum: float | None = 20e-12
    phase_shifter_bits: int | None = 6

    def __post_init__(self):
        if self.n_trm < 1 or self.n_ttd < 1 or self.n_trm % self.n_ttd != 0:
            raise ParameterError("n_trm must be a positive multiple of n_ttd")
        if self.spacing is not None:
            check_positive("spacing", self.spacing)
        if abs(self.steer_angle) >= 90.0:
            raise ParameterError("steer_angle must satisfy |angle| < 90 deg")
        if self.ttd_quantum is not None:
            check_positive("ttd_quantum", self.ttd_quantum)
        if self.phase_shifter_bits is not None and self.phase_shifter_bits < 1:
            raise ParameterError("phase_shifter_bits must be >= 1 or None")


@dataclass(frozen=True)
class SteeringWeights:
    """Resolved per-element weights for one steering direction."""

    f0: float
    steer_angle: float
    spacing: float
    positions: np.ndarray      # element positions, meters, aperture-centered
    group: np.ndarray          # element -> TTD group index
    ttd_delay: np.ndarray      # per-group delay, seconds
    phase: np.ndarray          # per-element shifter setting, radians

    def __post_init__(self):
        for name in ("positions", "group", "ttd_delay", "phase"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def element_delay(self) -> np.ndarray:
        return self.ttd_delay[self.group]


def _wrap_phase(phi: np.ndarray) -> np.ndarray:
    return (phi + np.pi) % (2.0 * np.pi) - np.pi


def steering_weights(cfg: ArrayConfig, f0: float) -> SteeringWeights:
    """Compute the hybrid TTD + phase-shifter settings steering to
    ``cfg.steer_angle`` at carrier ``f0``."""
    check_positive("f0", f0)
    spacing = cfg.spacing if cfg.spacing is not None else SPEED_OF_LIGHT / f0 / 2.0
    positions = (np.arange(cfg.n_trm) - (cfg.n_trm - 1) / 2.0) * spacing
    group = np.arange(cfg.n_trm) // (cfg.n_trm // cfg.n_ttd)
    centers = np.array([positions[group == m].mean() for m in range(cfg.n_ttd)])

    sin_steer = np.sin(np.deg2rad(cfg.steer_angle))
    ttd = centers * sin_steer / SPEED_OF_LIGHT
    if cfg.ttd_quantum is not None:
        ttd = np.round(ttd / cfg.ttd_quantum) * cfg.ttd_quantum

    residual = positions * sin_steer / SPEED_OF_LIGHT - ttd[group]
    phase = _wrap_phase(2.0 * np.pi * f0 * residual)
    if cfg.phase_shifter_bits is not None:
        step = 2.0 * np.pi / 2 ** cfg.phase_shifter_bits
        phase = _wrap_phase(np.round(phase / step) * step)

    return SteeringWeights(f0, cfg.steer_angle, spacing, positions, group, ttd, phase)


@dataclass(frozen=True)
class Beampattern:
    """Gain (dB) over a (frequency x angle) grid, 0 dB = per-frequency ideal peak."""

    freqs: np.ndarray    # absolute Hz
    angles: np.ndarray   # degrees
    gain_db: np.ndarray  # (n_freq, n_angle)

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        a = np.asarray(self.angles, dtype=float)
        g = np.asarray(self.gain_db, dtype=float)
        if f.size == 0 or a.size == 0:
            raise ConfigError("frequency and angle axes must be non-empty")
        if g.shape != (f.size, a.size):
            raise ParameterError("gain_db must be (n_freq, n_angle)")
        if not np.all(np.isfinite(g)):
            raise ParameterError("gain_db must be finite")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "gain_db", g)


def beampattern(cfg: ArrayConfig, weights: SteeringWeights,
                element_response: np.ndarray | None,
                freqs, angles) -> Beampattern:
    """Evaluate the steered pattern under per-element responses.

    ``element_response`` is an ``(n_trm, n_freq)`` complex matrix — injected
    errors, residuals after calibration, or ``None`` for the ideal array.
    Each frequency row is normalized by the ideal-array peak and by the mean
    element magnitude, so a response common to all elements (for instance the
    unknown response of the reference channel) cannot change the pattern.
    """
    freqs = np.asarray(freqs, dtype=float)
    angles = np.asarray(angles, dtype=float)
    if freqs.size == 0 or angles.size == 0:
        raise ConfigError("frequency and angle axes must be non-empty")
    if element_response is None:
        element_response = np.ones((cfg.n_trm, freqs.size), dtype=np.complex128)
    element_response = np.asarray(element_response, dtype=np.complex128)
    if element_response.shape != (cfg.n_trm, freqs.size):
        raise ParameterError("element_response must be (n_trm, n_freq)")

    sin_a = np.sin(np.deg2rad(angles))
    tau_steer = weights.element_delay[:, None]
    pos = weights.positions[:, None]
    shifter = np.exp(1j * weights.phase)[:, None]

    gain = np.empty((freqs.size, angles.size))
    floor = 1e-300  # keep log10 finite at pattern nulls
    for k, f in enumerate(freqs):
        steer = np.exp(2j * np.pi * f * (tau_steer - pos * sin_a[None, :] / SPEED_OF_LIGHT))
        steer *= shifter
        power = np.abs((element_response[:, k][:, None] * steer).sum(axis=0)) ** 2
        ideal_peak = (np.abs(steer.sum(axis=0)) ** 2).max()
        scale = np.mean(np.abs(element_response[:, k])) ** 2
        gain[k] = 10.0 * np.log10(np.maximum(power / (ideal_peak * scale), floor))
    return Beampattern(freqs, angles, gain)


@dataclass(frozen=True)
class PatternMetrics:
    """Per-frequency pointing error, peak loss, and highest sidelobe."""

    freqs: np.ndarray
    pointing_error_deg: np.ndarray
    peak_loss_db: np.ndarray
    peak_sidelobe_db: np.ndarray


def _refine_peak(angles: np.ndarray, row: np.ndarray, i: int) -> tuple[float, float]:
    """Quadratic refinement of the gridded peak: (angle, gain_db)."""
    gm, g0, gp = row[i - 1], row[i], row[i + 1]
    denom = gm - 2.0 * g0 + gp
    if denom >= 0.0:
        return float(angles[i]), float(g0)
    offset = 0.5 * (gm - gp) / denom
    step = angles[i + 1] - angles[i]
    return float(angles[i] + offset * step), float(g0 - 0.25 * (gm - gp) * offset)


def pattern_metrics(pattern: Beampattern, steer_angle: float) -> PatternMetrics:
    """Reduce a pattern to per-frequency metrics.

    The peak is refined with a parabola through the three samples around the
    argmax, so pointing error is continuous rather than snapped to the angle
    grid. Sidelobe level is the highest gain outside the null-to-null extent
    of the main lobe.
    """
    step = np.diff(pattern.angles)
    if step.size == 0 or step.max() > 0.1 + 1e-12:
        raise MetricError("angle grid must resolve the main lobe (<= 0.1 deg steps)")

    n_freq = pattern.freqs.size
    pointing = np.empty(n_freq)
    loss = np.empty(n_freq)
    sidelobe = np.empty(n_freq)
    for k in range(n_freq):
        row = pattern.gain_db[k]
        i = int(np.argmax(row))
        if i == 0 or i == len(row) - 1:
            raise MetricError("pattern peak sits on the angle-grid boundary")
        angle_hat, gain_hat = _refine_peak(pattern.angles, row, i)
        pointing[k] = angle_hat - steer_angle
        loss[k] = -gain_hat

        left = i
        while left > 0 and row[left - 1] < row[left]:
            left -= 1
        right = i
        while right < len(row) - 1 and row[right + 1] < row[right]:
            right += 1
        if left == 0 or right == len(row) - 1:
            raise MetricError("main lobe is truncated by the angle grid")
        sidelobe[k] = max(row[:left].max(), row[right + 1:].max())
    return PatternMetrics(pattern.freqs, pointing, loss, sidelobe)
