"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value is invalid or cannot be satisfied."""


class DataError(ValueError):
    """Input data violates a pipeline precondition."""


class ParseError(ValueError):
    """A file failed to parse; the message names the file and line."""


class FormatError(ValueError):
    """A file has an unrecognized schema (wrong header or structure)."""
