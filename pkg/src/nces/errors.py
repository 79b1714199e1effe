"""Exception hierarchy shared across the package."""


class NCESError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(NCESError, ValueError):
    """Malformed expression or knowledge-base file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownNameError(NCESError, KeyError):
    """A class, role or individual name that was never declared."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class VocabularyError(NCESError, ValueError):
    pass


class DataError(NCESError, ValueError):
    """Input data that cannot be processed (empty sets, bad records...)."""


class ShapeError(NCESError, ValueError):
    pass


class NumericError(NCESError, ArithmeticError):
    """Non-finite loss or gradient encountered during optimisation."""
