"""Exception hierarchy shared by every vecsum module."""


class VecsumError(Exception):
    """Base class for all errors raised by vecsum."""


class InvalidIndex(VecsumError, ValueError):
    """A sparse entry index was negative or not an integer."""


class InvalidScalar(VecsumError, ValueError):
    """A scale factor was NaN or infinite."""


class InvalidInput(VecsumError, ValueError):
    """Input data violates a type invariant (empty set, bad weights, ...)."""


class InvalidConfig(VecsumError, ValueError):
    """Inconsistent parameters, e.g. a leaf buffer too small to halve."""


class NumericalFailure(VecsumError, ArithmeticError):
    pass


class EmptyStream(VecsumError):
    """Finalize or collect was called before any point was inserted."""


class UnsupportedNegative(VecsumError, ValueError):
    """Count-Min received a negative update."""


class UnknownUser(VecsumError, KeyError):
    pass
