"""Exception hierarchy for qpolar."""


class QPolarError(Exception):
    """Base class for all qpolar errors."""


class ContractError(QPolarError, ValueError):
    """An argument violates an operation's preconditions (shape, size, range)."""


class InvalidStateError(QPolarError, ValueError):
    """A matrix fails the density-operator invariants."""


class UnsupportedInputError(QPolarError, ValueError):
    """Input is well formed but outside what the operation handles."""


class NumericalError(QPolarError, ArithmeticError):
    """An intermediate result drifted outside numerical tolerance."""


class NumericalDegeneracyError(NumericalError):
    """Simultaneous diagonalization could not resolve a degenerate block."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ClassificationError(QPolarError):
    """A channel's symmetry class is inconsistent with the requested operation."""


class ResourceLimitError(QPolarError):
    """Requested size exceeds what is tractable on a desk-scale machine."""


class SpecParseError(ContractError):
    """A channel specification file is malformed; ``location`` names the line or field."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
