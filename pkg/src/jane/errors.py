"""Exception types raised across the package."""


class JaneError(Exception):
    pass


class IndexOutOfRange(JaneError, IndexError):
    pass


class SelfLoop(JaneError, ValueError):
    pass


class NotConnected(JaneError, ValueError):
    pass


class KTooLarge(JaneError, ValueError):
    pass


class TooLarge(JaneError, ValueError):
    pass


class ShapeMismatch(JaneError, ValueError):
    pass


class NonPositiveScale(JaneError, ValueError):
    pass


class InvalidConfig(JaneError, ValueError):
    pass


class InvalidFraction(JaneError, ValueError):
    pass


class EmptyLabelSet(JaneError, ValueError):
    pass


class NoLabels(JaneError, ValueError):
    pass


class DivergenceDetected(JaneError, FloatingPointError):
    """Training objective became NaN or infinite.

    The partial ``TrainReport`` is attached as ``.report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParseError(JaneError, ValueError):
    def __init__(self, path, line, column, message):
        where = ":".join(str(p) for p in (path, line, column) if p is not None)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
        self.column = column


class DimensionMismatch(JaneError, ValueError):
    pass


class UnknownLabelValue(JaneError, ValueError):
    pass


class ChecksumMismatch(JaneError, ValueError):
    pass


class EmptyTable(JaneError, ValueError):
    pass
