"""Exception types shared across the package."""


class ShapeError(ValueError):
    """An operand has the wrong rank or incompatible dimensions."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value."""

    def __init__(self, message, op=None):
        super().__init__(message)
        self.op = op


class DataError(ValueError):
    """Input data violates a format or content contract."""


class DegenerateCorpusError(DataError):
    """A score population has zero variance and cannot be standardized."""


class TreeError(ValueError):
    """A head assignment or parse matrix does not encode a valid tree."""


class ParseError(DataError):
    """A malformed line in an input file."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class ConfigError(ValueError):
    """Inconsistent or invalid training/command configuration."""
