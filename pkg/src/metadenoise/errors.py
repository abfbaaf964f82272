"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes, extents, or parameter layouts disagree."""


class NumericError(ArithmeticError):
    """A computation produced or encountered a non-finite value."""


class DataFormatError(ValueError):
    """A file's content does not match its declared format."""


class ConfigError(ValueError):
    """An experiment configuration is missing, malformed, or inconsistent."""
