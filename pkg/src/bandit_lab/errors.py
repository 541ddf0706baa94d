"""Exception hierarchy shared by all modules."""


class BanditLabError(Exception):
    """Base class for errors raised by this package."""


class ParameterDomainError(BanditLabError, ValueError):
    """A distribution or model parameter lies outside its domain."""


class DegeneratePriorError(BanditLabError, ValueError):
    """A prior with zero precision or zero rate was used where it is undefined."""


class UndefinedMomentError(BanditLabError, ValueError):
    """A requested moment does not exist for the given parameters."""


class DataError(BanditLabError, ValueError):
    """Input data is malformed (too short, non-finite, mismatched lengths)."""


class ConfigError(BanditLabError):
    """Configuration text could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
