"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class ParseError(ValueError):
    """A data file does not conform to the expected schema."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DegenerateConfigurationError(ValueError):
    """A point configuration is too degenerate for the requested operation."""


class UndefinedMeanError(ValueError):
    """The extrinsic mean is undefined because the resultant length is ~0."""
