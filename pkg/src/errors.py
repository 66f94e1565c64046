"""
Exception hierarchy for flux-sense.

Every error raised on purpose by the package derives from FluxSenseError so the
CLI can map it onto an exit code.
"""
from typing import Optional


class FluxSenseError(Exception):
    """Base class for all flux-sense errors."""


class ConfigError(FluxSenseError, ValueError):
    """Invalid experiment configuration."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        location = ""
        if source and line:
            location = f"{source}:{line}: "
        elif line:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")


class FluxRangeError(FluxSenseError, ValueError):
    """Flux outside the configured dynamic range."""


class DegenerateModelError(FluxSenseError, ValueError):
    """Detuning model with zero slope at the operating point, or an empty range."""


class IndexRangeError(FluxSenseError, IndexError):
    """Gate target index outside the register."""


class EngineCapacityError(FluxSenseError):
    """Requested register is larger than the engine cap."""


class IntegratorError(FluxSenseError):
    """RK4 step-halving did not converge before the minimum step."""


class UndefinedVarianceError(FluxSenseError, ValueError):
    """Fewer than two repetitions per flux; the accuracy variance is undefined."""


class ScalingFitError(FluxSenseError, ValueError):
    """Log-log fit requested on too few or non-positive points."""


class ResumeMismatchError(FluxSenseError):
    """Existing output was produced by a different configuration."""
