class QuotientError(Exception):
    """Base class for every error raised by the quotients package."""


class InputError(QuotientError, ValueError):
    """The caller supplied something the computation cannot accept."""


class SelectorError(InputError):
    pass


class InvalidStratumError(InputError):
    pass


class DimensionGuardError(InputError):
    pass


class ScaleGuardError(InputError):
    pass


class UnrealizableSupportError(InputError):
    pass


class PreconditionError(InputError):
    pass


class WrongFamilyKindError(InputError):
    pass


class ArithmeticOverflowError(QuotientError, ArithmeticError):
    pass


class InvariantViolation(QuotientError):
    pass
