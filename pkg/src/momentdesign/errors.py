"""Exception hierarchy shared by all modules."""


class DesignError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(DesignError, ValueError):
    pass


class DegreeOverflow(DesignError, ValueError):
    """A moment of higher order than the sequence carries was requested."""


class MissingBallCertificate(DesignError):
    """No constraint of the form R^2 - |x|^2 >= 0 is present."""


class SamplingFailed(DesignError):
    pass


class NegativeBlockOrder(DesignError, ValueError):
    pass


class InfeasibleStart(DesignError):
    pass


class NumericalFailure(DesignError):
    pass


class MaxIterations(DesignError):
    pass


class SingularMomentMatrix(DesignError, ValueError):
    pass


class UnsupportedDimension(DesignError, ValueError):
    pass


class NotFlat(DesignError):
    """Rank condition never held up to the maximal relaxation increment."""

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


class EchelonFailure(DesignError):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class ExtractionFailed(DesignError):
    pass


class BadFit(DesignError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NegativeWeight(DesignError):
    pass


class ProblemFileError(DesignError, ValueError):
    """Malformed problem or report file; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
