"""
Errors Module
Exception hierarchy shared by the algebra, protocol and certificate modules.
"""

from typing import Any, List, Optional, Sequence


class AlgCommError(ValueError):
    """Root of every error raised by the workbench."""


class VarSpaceMismatchError(AlgCommError):
    """Operands live in different variable spaces."""


class FieldMismatchError(AlgCommError):
    """Operands carry different coefficient fields (real vs complex)."""


class ArityError(AlgCommError):
    """A substitution, point or index does not match the variable count."""


class ZeroPolynomialError(AlgCommError):
    """An operation that needs a nonzero polynomial received zero."""


class FrameError(AlgCommError):
    """A polynomial or point is in the wrong coordinate frame."""


class PairingError(AlgCommError):
    """A complex-to-real variable pairing is incomplete or inconsistent."""


class CapExceededError(AlgCommError):
    """A configured size cap (variables, degree, knapsack n) was exceeded."""


class LemmaPreconditionError(AlgCommError):
    """The hypothesis of a lemma checker does not hold for the given input."""


class AdversaryVerificationError(AlgCommError):
    """A fooling pair failed its own re-verification."""


class UsageError(AlgCommError):
    """Malformed command line."""


class ProtocolValidationError(AlgCommError):
    """A protocol tree or family violates the model constraints."""

    def __init__(self, message: str, violations: Optional[Sequence[Any]] = None):
        super().__init__(message)
        self.violations: List[Any] = list(violations or [])


class MissingBranchError(AlgCommError):
    """A run reached a sign tuple that the node has no branch for."""

    def __init__(self, node_id: str, signs: Sequence[Any]):
        rendered = ','.join(getattr(s, 'value', str(s)) for s in signs)
        super().__init__(f'Node {node_id}: no branch for sign tuple ({rendered})')
        self.node_id = node_id
        self.signs = tuple(signs)


class ProtocolParseError(AlgCommError):
    """A protocol file could not be parsed."""

    def __init__(self, message: str, path: str = '', line: Optional[int] = None):
        location = path or '<document>'
        if line is not None:
            location = f'line {line}: {location}'
        super().__init__(f'{location}: {message}')
        self.path = path
        self.line = line
