"""Exception hierarchy. The CLI maps every ``LideError`` to exit code 1."""


class LideError(Exception):
    """Base class for data and model errors raised by this package."""


class DslFormatError(LideError):
    """Malformed corpus input."""


class ModelFormatError(LideError):
    """A model file that cannot be loaded."""


class TrainingError(LideError):
    """Training diverged or was given unusable data."""
