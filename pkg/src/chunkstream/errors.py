"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes do not fit together."""


class ConfigError(ValueError):
    """Invalid hyperparameter or configuration value."""


class StreamStateError(RuntimeError):
    """Stream used after it was closed, or otherwise out of order."""


class ParseError(ValueError):
    """Malformed input file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
