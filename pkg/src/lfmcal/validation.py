"""Small input-validation helpers shared by the estimator API and core ops."""

from __future__ import annotations

import numpy as np

from .exceptions import ContractError, ParameterError


def check_positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be a finite positive number, got {value!r}")
    return value


def check_fraction(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value < 1.0):
        raise ParameterError(f"{name} must lie in [0, 1), got {value!r}")
    return value


def as_complex_samples(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError("samples must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ParameterError("samples must be finite")
    return arr


def check_same_rate(a, b) -> None:
    if not np.isclose(a.rate, b.rate, rtol=1e-12, atol=0.0):
        raise ContractError(f"sample-rate mismatch: {a.rate} Hz vs {b.rate} Hz")
