"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI reports for it.
"""
from typing import Any, Dict, Optional


class RenormalizationError(Exception):
    """Base class for all errors raised by the package."""

    exit_code: int = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context or {})

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the error for the run manifest."""
        return {
            "type": self.__class__.__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "context": self.context,
        }


class ConfigError(RenormalizationError):
    """Malformed config file, unknown mode or violated field constraint."""

    exit_code = 2

    def __init__(self, message: str, field: str = "", constraint: str = ""):
        super().__init__(message, {"field": field, "constraint": constraint})
        self.field = field
        self.constraint = constraint


class PreconditionError(RenormalizationError):
    """A documented precondition of an operation does not hold."""

    exit_code = 3


class HypothesisViolation(PreconditionError):
    """A theorem hypothesis (e.g. ``|beta| < |alpha|^N``) fails."""

    def __init__(self, inequality: str, lhs: float, rhs: float):
        super().__init__(
            f"hypothesis violated: {inequality} (lhs={lhs:.17g}, rhs={rhs:.17g})",
            {"inequality": inequality, "lhs": lhs, "rhs": rhs},
        )
        self.inequality = inequality


class DomainError(PreconditionError, ValueError):
    """Input outside the domain of an operation."""


class ConstructionError(PreconditionError):
    """An object cannot be built because a structural hypothesis fails."""


class ResonanceError(PreconditionError):
    """Resonant multipliers obstruct the requested normal form."""


class DiagnosticError(RenormalizationError):
    """A numerical diagnostic detected an unreliable result."""

    exit_code = 4


class EvaluationError(DiagnosticError):
    """Non-finite value produced or supplied."""


class NormalFamilyError(DiagnosticError):
    """The sampled family shows no derivative growth."""


class ResidualError(DiagnosticError):
    """The conjugation residual stopped decreasing."""


class SearchFailure(DiagnosticError):
    """An iterative search did not converge."""

    def __init__(self, message: str, trace: Optional[list] = None):
        super().__init__(message, {"trace": list(trace or [])})
        self.trace = list(trace or [])


class VerificationFailure(DiagnosticError):
    """A verified identity failed on the sample."""


class MissingIndexError(RenormalizationError, KeyError):
    """Requested index is not present in a sequence."""

    def __str__(self) -> str:
        return self.message
