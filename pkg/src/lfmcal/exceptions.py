"""Exception hierarchy for lfmcal.

Every error raised by the library derives from :class:`LfmCalError` so callers
can catch library failures with a single except clause. The subclasses mirror
the distinct failure modes of the calibration pipeline.
"""


class LfmCalError(Exception):
    """Base class for all lfmcal errors."""


class ParameterError(LfmCalError, ValueError):
    """Invalid construction parameters (waveform, curve, or array config)."""


class DomainError(LfmCalError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class QuantizationError(LfmCalError, ValueError):
    """Requested delay is not representable on the configured sample grid."""


class ContractError(LfmCalError, ValueError):
    """Inputs violate an inter-argument contract (e.g. sample-rate mismatch)."""


class EstimationError(LfmCalError, RuntimeError):
    """Estimator cannot produce a result (degenerate or insufficient input)."""


class ConfigError(LfmCalError, ValueError):
    """Invalid window, sub-band, scenario, or rendering configuration."""


class CoverageError(LfmCalError, ValueError):
    """Calibration bins do not cover enough of the signal band."""


class AlignmentError(LfmCalError, RuntimeError):
    """Coarse delay compensation failed (lag too large to trust)."""


class MetricError(LfmCalError, RuntimeError):
    """Beampattern metric extraction failed (main lobe truncated by grid)."""


class ManifestError(LfmCalError, ValueError):
    """Scenario manifest is missing required artifacts or is inconsistent."""
