# src/utils/errors.py


class ParapdeError(Exception):
    """Base class for every error raised by the library."""


class StructuralError(ParapdeError, ValueError):
    """Grid, dimension or array-shape mismatch."""


class ArgumentError(ParapdeError, ValueError):
    """A scalar argument outside its admissible range."""


class ConfigurationError(ParapdeError):
    """Invalid or incomplete configuration."""


class AliasingError(ParapdeError):
    """Padding too small for an exact spectral product."""


class PicardConvergenceError(ParapdeError):
    """Within-step fixed-point iteration did not converge; reduce dt."""

    def __init__(self, message, time=None, increment=None):
        super().__init__(message)
        self.time = time
        self.increment = increment


class UsageError(ParapdeError):
    """Unknown experiment or malformed command line."""


class ToleranceFailure(ParapdeError):
    """An acceptance gate failed."""

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = failures or []


class FixtureMismatch(ToleranceFailure):
    """Regenerated oracle values drifted from the committed fixtures."""
