"""Exception types shared across the package."""


class CalvaeError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CalvaeError):
    """Malformed CSV row; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyDataError(CalvaeError):
    """Filtering produced no rows; the input file is not the expected one."""


class SchemaError(CalvaeError):
    """Column names or array shapes do not match what the operation expects."""


class DegenerateColumnError(CalvaeError):
    """A column is constant where a non-degenerate range is required."""


class NumericError(CalvaeError):
    """A non-finite value appeared; carries the offending stage name."""

    def __init__(self, stage: str, message: str = "non-finite value"):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class MetricError(CalvaeError):
    """Invalid metric input (length mismatch, empty, undefined result)."""


class ModelIOError(CalvaeError):
    """Base class for model-file load failures."""


class ModelVersionError(ModelIOError):
    """Model file was written by an incompatible format version."""


class ModelChecksumError(ModelIOError):
    """Model file is corrupted or truncated (checksum mismatch)."""
