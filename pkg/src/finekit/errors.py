"""Exception types raised across the toolkit.

Every error is a subclass of FinekitError so callers (and the CLI) can catch
toolkit failures with a single except clause and map them to exit code 1.
"""


class FinekitError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(FinekitError):
    """Operands disagree on vector/matrix dimensions."""


class EmptyClassError(FinekitError):
    """An operation needs at least one sample and got none."""


class ConvergenceError(FinekitError):
    """Iteration budget exhausted before the residual target was met."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NotUnitError(FinekitError):
    """A vector that must have unit norm does not."""


class TooFewSamplesError(FinekitError):
    """Fewer samples than a fit requires."""


class InvalidRateError(FinekitError):
    """Noise rate outside [0, 1)."""


class InvalidMappingError(FinekitError):
    """Pairwise label mapping is malformed or out of range."""


class InvalidSuperclassError(FinekitError):
    """Superclass block size does not partition the label set."""


class InvalidSpecError(FinekitError):
    """Synthetic-data parameters are out of range or inconsistent."""


class EmptyDatasetError(FinekitError):
    """Dataset has no samples."""


class LengthMismatchError(FinekitError):
    """Paired arrays have different lengths."""


class InvalidDeltaError(FinekitError):
    """Confidence level delta outside (0, 1)."""


class InvalidSigmaError(FinekitError):
    """Noise scale sigma must be positive."""


class EmptySetError(FinekitError):
    """A set that must be non-empty (clean or noisy side) is empty."""


class FormatError(FinekitError):
    """File does not follow the declared layout."""


class TruncatedFileError(FormatError):
    """File ends before the declared payload."""


class CorruptLabelsError(FormatError):
    """Stored labels fall outside the declared class range."""


class ParseError(FinekitError):
    """Text input (CSV cell, sweep expression) could not be parsed."""
