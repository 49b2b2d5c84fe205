"""Exception hierarchy shared by all modules."""


class CopulaError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CopulaError, ValueError):
    pass


class NonConvergence(CopulaError, RuntimeError):
    pass


class NonFinite(CopulaError, FloatingPointError):
    pass


class NoBracket(CopulaError, ValueError):
    pass


class NotMonotone(CopulaError, ValueError):
    pass


class SupportInvalid(CopulaError, ValueError):
    pass


class IntegralDiverged(CopulaError, ArithmeticError):
    pass


class PositivityViolated(CopulaError, ValueError):
    """The constructed F would have a negative derivative somewhere."""


class LNotPositive(CopulaError, ValueError):
    pass


class DegenerateDiagonal(CopulaError, ZeroDivisionError):
    pass


class InversionFailed(CopulaError, RuntimeError):
    pass


class ConsistencyError(CopulaError, AssertionError):
    """Two algebraically equivalent evaluation routes disagreed."""


class ZeroLoad(CopulaError, ValueError):
    pass


class AmbiguousContext(CopulaError, ValueError):
    pass


class IncompatibleLevels(CopulaError, ValueError):
    pass


class ModelFormatError(CopulaError, ValueError):
    pass
