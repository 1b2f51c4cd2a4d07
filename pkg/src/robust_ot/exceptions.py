"""Exception hierarchy shared by every solver and estimator."""


class RobustOTError(Exception):
    """Base class for all errors raised by :mod:`robust_ot`."""


class EmptyInput(RobustOTError, ValueError):
    pass


class InvalidRadius(RobustOTError, ValueError):
    pass


class MassMismatch(RobustOTError, ValueError):
    pass


class UnknownFamily(RobustOTError, ValueError):
    pass


class InvalidDimensions(RobustOTError, ValueError):
    pass


class InvalidMomentOrder(RobustOTError, ValueError):
    pass


class Unsupported(RobustOTError, ValueError):
    pass


class EmptyFamily(RobustOTError, ValueError):
    pass


class BeyondBreakdown(RobustOTError, ValueError):
    """Raised when the contamination level reaches the 1/3 breakdown point."""


class TooLarge(RobustOTError, ValueError):
    pass


class NoPotentials(RobustOTError, ValueError):
    pass


class NoElbow(RobustOTError, ValueError):
    pass


class InputFormatError(RobustOTError, ValueError):
    """Malformed point-cloud file; ``line`` and ``column`` locate the problem."""

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        self.reason = message
        where = f"{source}: " if source else ""
        if line is not None:
            where += f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)

    def with_source(self, source):
        return InputFormatError(self.reason, self.line, self.column, source)


class NumericalFailure(RobustOTError, RuntimeError):
    pass


class NotConverged(RobustOTError, RuntimeError):
    """Iteration limit reached; the partial result is kept on ``result``."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
