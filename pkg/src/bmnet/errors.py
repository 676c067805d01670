"""Exception hierarchy shared by every bmnet module."""


class BmnetError(Exception):
    """Base class for all errors raised by bmnet."""


class ShapeError(BmnetError, ValueError):
    """Operand shapes are incompatible."""


class ConfigError(BmnetError, ValueError):
    """A configuration value violates its contract."""


class ContractError(BmnetError, ValueError):
    """A call precondition was violated (empty batch, non-scalar root, ...)."""


class DegenerateBatchError(ContractError):
    """Batch statistics cannot be estimated from fewer than two values."""


class MiningError(BmnetError, ValueError):
    """No valid pair or triplet can be drawn from a batch."""


class DivergenceError(BmnetError, FloatingPointError):
    """Training produced a non-finite value."""

    def __init__(self, message, *, name=None, epoch=None):
        super().__init__(message)
        self.name = name
        self.epoch = epoch


class ParseError(BmnetError, ValueError):
    """Malformed input file."""

    def __init__(self, message, *, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IncompatibleRunsError(BmnetError, ValueError):
    """Two runs cannot be compared with the requested test."""
