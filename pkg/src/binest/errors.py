"""Exception types raised across the package."""


class BinestError(Exception):
    """Base class for all package errors."""


class ParameterError(BinestError, ValueError):
    """An argument is outside its admissible domain."""


class ConfigError(BinestError, ValueError):
    """An experiment configuration document is malformed."""


class ParseError(BinestError, ValueError):
    """An input file could not be parsed.

    ``line`` is the 1-based line (or data row) where parsing failed, if known.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class CapacityError(BinestError, ValueError):
    """The requested enumeration is too large."""


class UnsupportedModelError(BinestError, TypeError):
    """The disturbance model does not support the requested operation."""


class PreconditionError(BinestError, ValueError):
    """A structural hypothesis on the inputs does not hold."""


class NumericError(BinestError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""


class ConvergenceError(BinestError, RuntimeError):
    """An iterative procedure stopped before meeting its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
