"""Exception hierarchy shared by all modules."""


class SRRError(Exception):
    """Base class for errors raised by this package."""

    category = "solver"


class InvalidDimensions(SRRError, ValueError):
    category = "config"


class DimensionMismatch(SRRError, ValueError):
    category = "config"


class ZeroInitialVector(SRRError, ValueError):
    category = "config"


class SketchTooSmall(SRRError, ValueError):
    category = "config"


class NotPositiveDefinite(SRRError):
    """Cholesky pivot fell below the failure threshold."""


class IllConditionedBasis(NotPositiveDefinite):
    """The Krylov basis is too ill-conditioned for the Gram-matrix correction.

    Rebuilding with a larger sketch dimension usually fixes this.
    """


class RankDeficientBasis(SRRError):
    pass


class NoConvergence(SRRError):
    pass


class NotConverged(SRRError):
    pass


class SingularDivisor(SRRError):
    pass


class DomainError(SRRError, ValueError):
    """A scalar function was evaluated outside its domain."""


class SingularProjectedMatrix(SRRError):
    pass


class Breakdown(SRRError):
    pass


class UnsupportedSize(SRRError, ValueError):
    category = "config"


class ParseError(SRRError, ValueError):
    category = "io"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedField(ParseError):
    pass


class NonSquare(SRRError, ValueError):
    category = "config"


class ConfigError(SRRError, ValueError):
    category = "config"


class InputOutputError(SRRError, OSError):
    category = "io"
