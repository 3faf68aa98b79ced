"""Per-channel error models: frequency-dependent amplitude/phase and delays.

Amplitude curves are dB, phase curves radians, both defined over the baseband
sweep; delays split into a coarse part (multiple of the base sample period)
and a precise sub-sample part (multiple of the fine grid, 20 ps by default).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import ParameterError, QuantizationError
from .validation import check_positive
from .waveform import IqTrace, LfmParams, _baseband_freq, apply_delay

DEFAULT_N_KNOTS = 8
DEFAULT_FINE_GRID = 20e-12

ERROR_KINDS = ("constant", "freq_dependent", "freq_dependent_with_delay")


@dataclass(frozen=True)
class ErrorCurve:
    """Smooth real-valued curve over baseband frequency, defined by knots.

    Evaluation clamps the query frequency to the knot span (never
    extrapolates) and, when ``value_bounds`` is set, clips cubic overshoot
    back into the declared range.
    """

    knot_freqs: np.ndarray
    knot_values: np.ndarray
    value_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        kf = np.asarray(self.knot_freqs, dtype=float)
        kv = np.asarray(self.knot_values, dtype=float)
        if kf.ndim != 1 or kf.size < 2 or kf.shape != kv.shape:
            raise ParameterError("need >= 2 knots with matching value array")
        if np.any(np.diff(kf) <= 0):
            raise ParameterError("knot_freqs must be strictly ascending")
        if not (np.all(np.isfinite(kf)) and np.all(np.isfinite(kv))):
            raise ParameterError("knots must be finite")
        if self.value_bounds is not None:
            lo, hi = self.value_bounds
            if not lo <= hi:
                raise ParameterError("value_bounds must be ordered (lo, hi)")
            object.__setattr__(self, "value_bounds", (float(lo), float(hi)))
        kf.setflags(write=False)
        kv.setflags(write=False)
        object.__setattr__(self, "knot_freqs", kf)
        object.__setattr__(self, "knot_values", kv)

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.knot_freqs, self.knot_values, bc_type="natural")

    def __call__(self, freqs) -> np.ndarray:
        f = np.clip(np.asarray(freqs, dtype=float),
                    self.knot_freqs[0], self.knot_freqs[-1])
        vals = self._spline(f)
        if self.value_bounds is not None:
            vals = np.clip(vals, *self.value_bounds)
        return vals

    @property
    def span(self) -> tuple[float, float]:
        return float(self.knot_freqs[0]), float(self.knot_freqs[-1])

    def is_zero(self) -> bool:
        return bool(np.all(self.knot_values == 0.0))

    def detrended(self, n_eval: int = 1001) -> "ErrorCurve":
        """Return a copy with the least-squares linear-in-frequency slope
        removed (mean kept).

        A linear phase-vs-frequency component is indistinguishable from a
        time delay, so curves used together with injected delays must carry
        no slope of their own for the delay to be identifiable. Natural cubic
        splines reproduce straight lines exactly, so subtracting the fitted
        slope at the knots subtracts it from the whole curve. Value bounds
        are dropped: the de-trended curve may leave the original range.
        """
        dense = np.linspace(self.knot_freqs[0], self.knot_freqs[-1], n_eval)
        slope = np.polyfit(dense, self._spline(dense), 1)[0]
        return ErrorCurve(self.knot_freqs, self.knot_values - slope * self.knot_freqs)


def constant_curve(value: float, bw: float) -> ErrorCurve:
    """Flat curve over the band, for frequency-independent errors."""
    check_positive("bw", bw)
    return ErrorCurve(np.array([-bw / 2, bw / 2]), np.array([value, value], dtype=float))


def gen_random_curve(range_low: float, range_high: float, n_knots: int,
                     seed, bw: float) -> ErrorCurve:
    """Random smooth curve: uniform knot values over equally spaced knots.

    Deterministic for a given seed; evaluated values never leave
    ``[range_low, range_high]`` thanks to post-interpolation clamping.
    """
    if range_low > range_high:
        raise ParameterError("range_low must not exceed range_high")
    if n_knots < 2:
        raise ParameterError("n_knots must be >= 2")
    check_positive("bw", bw)
    rng = np.random.default_rng(seed)
    kf = np.linspace(-bw / 2, bw / 2, n_knots)
    kv = rng.uniform(range_low, range_high, n_knots)
    return ErrorCurve(kf, kv, value_bounds=(range_low, range_high))


@dataclass(frozen=True)
class TrmErrorModel:
    """One channel's injected error: amp/phase curves plus split delay.

    ``coarse_delay`` must sit on the coarse grid (base sample period) and
    ``precise_delay`` on the fine grid, with the precise part strictly
    smaller than one coarse step.
    """

    trm_id: int
    amp: ErrorCurve
    phase: ErrorCurve
    coarse_delay: float = 0.0
    precise_delay: float = 0.0
    coarse_grid: float = 0.5e-9
    fine_grid: float = DEFAULT_FINE_GRID

    def __post_init__(self):
        check_positive("coarse_grid", self.coarse_grid)
        check_positive("fine_grid", self.fine_grid)
        for name, value, grid in (("coarse_delay", self.coarse_delay, self.coarse_grid),
                                  ("precise_delay", self.precise_delay, self.fine_grid)):
            steps = value / grid
            if abs(steps - round(steps)) > 1e-6:
                raise QuantizationError(
                    f"{name} ({value} s) is not a multiple of its grid ({grid} s)"
                )
        if abs(self.precise_delay) >= self.coarse_grid:
            raise ParameterError(
                f"|precise_delay| ({abs(self.precise_delay)} s) must stay below "
                f"one coarse step ({self.coarse_grid} s)"
            )

    @property
    def total_delay(self) -> float:
        return self.coarse_delay + self.precise_delay

    def is_identity(self) -> bool:
        return self.amp.is_zero() and self.phase.is_zero() and self.total_delay == 0.0


def _spawn_seeds(seed, n: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def snap_to_grid(value: float, grid: float) -> float:
    return round(value / grid) * grid


def make_error_model(kind: str, *, bw: float, trm_id: int = 0, seed=0,
                     amp_db: float = 0.0, phase_rad: float = 0.0,
                     amp_range: tuple[float, float] | None = None,
                     phase_range: tuple[float, float] | None = None,
                     n_knots: int = DEFAULT_N_KNOTS,
                     coarse_delay: float = 0.0, precise_delay: float = 0.0,
                     coarse_grid: float = 0.5e-9,
                     fine_grid: float = DEFAULT_FINE_GRID) -> TrmErrorModel:
    """Build one of the three channel error types.

    ``constant``: flat curves at ``amp_db`` / ``phase_rad``, no delay.
    ``freq_dependent``: random curves drawn from the given ranges, no delay.
    ``freq_dependent_with_delay``: random curves plus coarse/precise delay;
    requested delays are snapped to their grids. The phase curve is
    de-trended (see :meth:`ErrorCurve.detrended`) so the injected delay owns
    the linear phase component.
    """
    if kind not in ERROR_KINDS:
        raise ParameterError(f"unknown error kind {kind!r}; expected one of {ERROR_KINDS}")

    if kind == "constant":
        if amp_range is not None or phase_range is not None:
            raise ParameterError("constant models take amp_db/phase_rad, not ranges")
        return TrmErrorModel(trm_id, constant_curve(amp_db, bw),
                             constant_curve(phase_rad, bw),
                             coarse_grid=coarse_grid, fine_grid=fine_grid)

    if amp_range is None or phase_range is None:
        raise ParameterError(f"{kind} models require amp_range and phase_range")
    amp_seed, phase_seed = _spawn_seeds(seed, 2)
    amp = gen_random_curve(amp_range[0], amp_range[1], n_knots, amp_seed, bw)
    phase = gen_random_curve(phase_range[0], phase_range[1], n_knots, phase_seed, bw)

    if kind == "freq_dependent":
        if coarse_delay != 0.0 or precise_delay != 0.0:
            raise ParameterError("freq_dependent models carry no delay; use "
                                 "freq_dependent_with_delay")
        return TrmErrorModel(trm_id, amp, phase,
                             coarse_grid=coarse_grid, fine_grid=fine_grid)

    return TrmErrorModel(
        trm_id, amp, phase.detrended(),
        coarse_delay=snap_to_grid(coarse_delay, coarse_grid),
        precise_delay=snap_to_grid(precise_delay, fine_grid),
        coarse_grid=coarse_grid, fine_grid=fine_grid,
    )


def inject_errors(x: IqTrace, model: TrmErrorModel, params: LfmParams) -> IqTrace:
    """Apply a channel model to the clean chirp: delay, then multiply by the
    amplitude/phase curves evaluated at the delayed instantaneous frequency.
    """
    if model.is_identity():
        return x

    tau = model.total_delay
    if tau != 0.0:
        factor = 1.0 / (model.fine_grid * x.rate)
        if abs(factor - round(factor)) > 1e-6 or round(factor) < 1:
            raise QuantizationError(
                f"fine grid {model.fine_grid} s is not an integer subdivision "
                f"of the sample period at {x.rate} Hz"
            )
        delayed = apply_delay(x, tau, round(factor))
    else:
        delayed = x

    t = delayed.times()
    f = _baseband_freq(params, np.clip(t - tau, 0.0, params.pulse_width))
    gain = 10.0 ** (model.amp(f) / 20.0) * np.exp(1j * model.phase(f))
    return IqTrace(delayed.samples * gain, x.rate, x.t0)


# --- JSON round-trip (delays stored in ps, units declared in the document) ---

_SCHEMA_VERSION = 1


def _curve_to_dict(curve: ErrorCurve) -> dict:
    d = {
        "knot_freqs_hz": curve.knot_freqs.tolist(),
        "knot_values": curve.knot_values.tolist(),
    }
    if curve.value_bounds is not None:
        d["value_bounds"] = list(curve.value_bounds)
    return d


def _curve_from_dict(d: dict) -> ErrorCurve:
    bounds = d.get("value_bounds")
    return ErrorCurve(np.asarray(d["knot_freqs_hz"]), np.asarray(d["knot_values"]),
                      None if bounds is None else (bounds[0], bounds[1]))


def models_to_dict(models: list[TrmErrorModel]) -> dict:
    return {
        "schema_version": _SCHEMA_VERSION,
        "units": {"freq": "Hz", "amp": "dB", "phase": "rad", "delay": "ps"},
        "models": [
            {
                "trm_id": m.trm_id,
                "amp": _curve_to_dict(m.amp),
                "phase": _curve_to_dict(m.phase),
                "coarse_delay_ps": m.coarse_delay * 1e12,
                "precise_delay_ps": m.precise_delay * 1e12,
                "coarse_grid_ps": m.coarse_grid * 1e12,
                "fine_grid_ps": m.fine_grid * 1e12,
            }
            for m in models
        ],
    }


def models_from_dict(doc: dict) -> list[TrmErrorModel]:
    if doc.get("schema_version") != _SCHEMA_VERSION:
        raise ParameterError(f"unsupported error-model schema: {doc.get('schema_version')!r}")
    out = []
    for m in doc["models"]:
        out.append(TrmErrorModel(
            trm_id=int(m["trm_id"]),
            amp=_curve_from_dict(m["amp"]),
            phase=_curve_from_dict(m["phase"]),
            coarse_delay=m["coarse_delay_ps"] * 1e-12,
            precise_delay=m["precise_delay_ps"] * 1e-12,
            coarse_grid=m["coarse_grid_ps"] * 1e-12,
            fine_grid=m["fine_grid_ps"] * 1e-12,
        ))
    return out


def save_error_models(path, models: list[TrmErrorModel]) -> None:
    Path(path).write_text(json.dumps(models_to_dict(models), indent=2, sort_keys=True))


def load_error_models(path) -> list[TrmErrorModel]:
    return models_from_dict(json.loads(Path(path).read_text()))
