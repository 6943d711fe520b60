"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`EllCovError`, which is itself a :class:`ValueError` so callers that
only care about "bad input" can catch the builtin.
"""


class EllCovError(ValueError):
    """Base class for all package errors."""


class DimensionMismatchError(EllCovError):
    pass


class NonSymmetricError(EllCovError):
    pass


class NotPositiveDefiniteError(EllCovError):
    pass


class BadDegreesOfFreedomError(EllCovError):
    pass


class InvalidGeneratorError(EllCovError):
    """A custom density generator fails its normalization checks."""


class UnsupportedFamilyError(EllCovError):
    pass


class NegativeArgumentError(EllCovError):
    pass


class ZeroWeightVectorError(EllCovError):
    pass


class ProbabilityOutOfRangeError(EllCovError):
    pass


class EmptySubsetError(EllCovError):
    pass


class DivergentIntegralError(EllCovError):
    """Adaptive quadrature did not reach the requested accuracy."""


class TooFewConditionedSamplesError(EllCovError):
    pass


class DegenerateConditionalVarianceError(EllCovError):
    pass


class NoConvergenceError(EllCovError):
    pass


class NonMonotoneObjectiveError(EllCovError):
    pass


class KOutOfRangeError(EllCovError):
    pass


class CellTooSmallError(EllCovError):
    pass


class ShapeMismatchError(EllCovError):
    pass


class DataFormatError(EllCovError):
    """Malformed CSV or JSON input; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
