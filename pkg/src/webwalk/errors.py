"""Exception types shared across the package."""

from __future__ import annotations


class SchemaError(ValueError):
    """A file does not match the expected structure (header, field names,
    unparseable line).  Carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelError(ValueError):
    """Invalid mobility-model input (bad counts, epsilon out of range)."""


class SamplingError(RuntimeError):
    """Sampling could not produce a valid draw within the retry budget."""


class ConvergenceError(RuntimeError):
    """An iterative computation failed to converge within its budget."""


class RoutingError(ValueError):
    """A path provider returned an unusable route."""


class AnalysisError(ValueError):
    """Invalid analysis input (empty sample, degenerate grid)."""


class ConfigError(ValueError):
    """Invalid run configuration."""


class TransportError(RuntimeError):
    """A place provider failed to answer a request."""
