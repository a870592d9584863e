"""Exception hierarchy shared by the numeric modules and the CLI."""


class RetrievalError(Exception):
    """Base class for every failure raised by this package."""

    exit_code = 1


class InputError(RetrievalError, ValueError):
    """Malformed input data or an invalid configuration."""

    exit_code = 2


class NumericalError(RetrievalError, ArithmeticError):
    """A computation that cannot deliver the requested accuracy."""

    exit_code = 3
