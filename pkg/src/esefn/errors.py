"""Exception hierarchy shared by every module."""


class EseFnError(Exception):
    """Base class for all package errors."""


class DimensionError(EseFnError, ValueError):
    """Tensor shapes are incompatible with an operation."""


class ConfigurationError(EseFnError, ValueError):
    """A parameter combination violates a structural constraint."""


class InputError(EseFnError, ValueError):
    """Data handed to an operation is invalid."""


class UsageError(EseFnError, RuntimeError):
    """An API was called in the wrong state."""


class NonFiniteError(EseFnError, FloatingPointError):
    """A NaN or Inf appeared in tensor data or gradients."""


class FormatError(EseFnError, ValueError):
    """A checkpoint file is malformed."""


class ParseError(InputError):
    """A feature file line could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PairingError(InputError):
    """Per-modality feature files do not describe the same samples."""
