"""Exception hierarchy shared by all weakflux modules."""


class WeakfluxError(Exception):
    """Base class for every error raised by the package."""


class NumericalError(WeakfluxError):
    """A computation could not produce a trustworthy number."""


class NonConvergent(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class NoInteriorMinimum(NumericalError):
    pass


class NonPositiveCurvature(NumericalError):
    pass


class VanishingOverlap(NumericalError):
    pass


class ZeroNorm(NumericalError):
    pass


class NearOrthogonalPostSelection(NumericalError):
    pass


class SteepestDescentMismatch(NumericalError):
    pass


class IdentityMismatch(NumericalError):
    """Two routes to a quantity that must agree did not."""


class InequalityViolation(NumericalError):
    """A bound that must hold was violated beyond the numerical tolerance."""


class ZeroField(WeakfluxError):
    pass


class DegeneratePostSpinor(WeakfluxError):
    pass


class UnknownOperator(WeakfluxError, KeyError):
    pass


class ParseError(WeakfluxError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(WeakfluxError, ValueError):
    pass
