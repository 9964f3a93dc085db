"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI reports for it.
"""


class SurvNetError(Exception):
    exit_code = 1


class ConfigError(SurvNetError, ValueError):
    exit_code = 2


class ShapeError(ConfigError):
    """Array dimensions do not line up with the model or each other."""


class DataError(SurvNetError, ValueError):
    exit_code = 3


class IdxFormatError(DataError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ParseError(DataError):
    def __init__(self, message, row, col):
        super().__init__(f"{message} (row {row}, column {col})")
        self.row = row
        self.col = col


class SelectionAborted(SurvNetError):
    """Every original variable was eliminated; the FDR estimate is undefined."""

    exit_code = 4


class TrainingDiverged(SurvNetError, ArithmeticError):
    exit_code = 5

    def __init__(self, epoch, value):
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}")
        self.epoch = epoch
        self.value = value


class NumericError(SurvNetError, ArithmeticError):
    """Non-finite values passed where finite numbers are required."""


class BookkeepingError(SurvNetError, RuntimeError):
    """Internal state was driven somewhere the selection loop never goes."""
