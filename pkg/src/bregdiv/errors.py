"""Exception hierarchy.

Every error raised by the package derives from :class:`BregdivError`. The three
intermediate classes map onto the CLI exit codes (2 validation, 3 numerical,
4 infeasible selection).
"""


class BregdivError(Exception):
    """Base class for all package errors."""


class ValidationError(BregdivError, ValueError):
    """Bad input or parameter, detected before any heavy computation."""


class NumericalError(BregdivError, ArithmeticError):
    """The computation itself failed (singularity, rank, solver)."""


class InfeasibleError(BregdivError):
    """No admissible parameter could be evaluated."""


# validation

class ParameterError(ValidationError):
    pass


class UnsupportedForSummaries(ValidationError):
    """The distance needs raw samples, not mean/covariance summaries."""


class TooFewObservations(ValidationError):
    pass


class SampleTooSmall(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class BadExponent(ValidationError):
    pass


class SchemeInfeasible(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class InconsistentArity(ValidationError):
    pass


# numerical

class EigenSolverError(NumericalError):
    pass


class NotPSD(NumericalError):
    pass


class NegativeEigenvalueBelowFloor(NumericalError):
    pass


class SingularCovariance(NegativeEigenvalueBelowFloor):
    def __init__(self, message, argument=None):
        super().__init__(message)
        self.argument = argument


class RankDeficient(NumericalError):
    def __init__(self, message, k=None, argument=None):
        super().__init__(message)
        self.k = k
        self.argument = argument


class NumericalConsistencyError(NumericalError):
    """A divergence came out clearly negative: cancellation beyond tolerance."""


class AllParametersInfeasible(InfeasibleError):
    pass
