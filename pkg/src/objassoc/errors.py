"""Exception types shared across the package."""


class ObjAssocError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ObjAssocError, ValueError):
    """An argument violates a documented precondition."""


class InvalidConfigurationError(ObjAssocError, ValueError):
    """A configuration value or combination is not usable."""


class NumericalError(ObjAssocError, ArithmeticError):
    """A numerical operation cannot proceed (e.g. near-singular covariance)."""


class DataFormatError(ObjAssocError, ValueError):
    """A serialized record is malformed or violates an invariant.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
