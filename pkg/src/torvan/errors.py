import logging

LOGGER = logging.getLogger(__name__)


class TorvanError(Exception):
    """Base class for every error raised by the toolkit."""


class InputError(TorvanError):
    """Malformed user input: JSON documents, module names, parameter ranges."""


class FieldMismatchError(TorvanError):
    def __init__(self, left, right):
        super().__init__(f"Field mismatch: {left} vs {right}")
        self.left = left
        self.right = right


class DivisionByZeroError(TorvanError, ZeroDivisionError):
    pass


class DimensionMismatchError(TorvanError):
    pass


class InclusionError(TorvanError):
    """Raised when a subspace is not contained in another; carries the offending vector."""

    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


class InvariantViolation(TorvanError):
    """A structural invariant failed. `witness` pins down where, `report` is the full check."""

    def __init__(self, message, witness=None, report=None):
        super().__init__(message)
        self.witness = witness
        self.report = report
