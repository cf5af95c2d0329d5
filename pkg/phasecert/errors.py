"""Exception hierarchy and structured diagnostics for phasecert."""

from enum import Enum
from typing import Any, Dict, List, Optional


class ErrorSeverity(Enum):
    """Error severity levels."""

    CRITICAL = "CRITICAL"
    ERROR = "ERROR"
    WARNING = "WARNING"
    INFO = "INFO"


class RejectionReason(Enum):
    """Why the admissibility gate refused a phase family."""

    LINEAR_PHASE = "LinearPhase"
    QUADRATIC_IS_Q = "QuadraticIsQ"
    DIMENSION_TOO_SMALL = "DimensionTooSmall"
    NOT_HOMOGENEOUS = "NotHomogeneous"
    NO_PHASES = "NoPhases"
    DEGENERATE_FORM = "DegenerateForm"


class PhaseCertError(Exception):
    """Base class for every error raised by phasecert."""

    code = "PhaseCertError"

    def to_diagnostic(self) -> Dict[str, Any]:
        return DiagnosticFormatter.format_error(self.code, str(self))


class PolyError(PhaseCertError, ValueError):
    """Malformed polynomial input or variable-count mismatch."""

    code = "PolyError"


class DomainError(PhaseCertError, ValueError):
    """An argument lies outside the domain of the operation (u = 0, gamma in D*, ...)."""

    code = "DomainError"


class ConfigError(PhaseCertError):
    """Unreadable or invalid configuration file."""

    code = "ConfigError"

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ""
        if path:
            location = f"{path}"
        if line is not None:
            location = f"{location}:{line}" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)

    def to_diagnostic(self) -> Dict[str, Any]:
        return DiagnosticFormatter.format_error(
            self.code, str(self), {"line": self.line, "path": self.path}
        )


class AdmissibilityError(PhaseCertError):
    """The phase family fails the admissibility gate."""

    code = "AdmissibilityError"

    def __init__(self, reason: RejectionReason, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)

    def to_diagnostic(self) -> Dict[str, Any]:
        return DiagnosticFormatter.format_error(
            self.reason.value, self.detail or self.reason.value, {"reason": self.reason.value}
        )


class InvariantViolation(PhaseCertError):
    """An internal consistency check failed."""

    code = "InvariantViolation"

    def __init__(self, message: str, code: Optional[str] = None):
        if code:
            self.code = code
        super().__init__(message)


class AllCoordinatesQType(InvariantViolation):
    """Every coordinate pair reported p2 as Q-type, so p2 lies in Span{Q}."""

    code = "AllCoordinatesQType"

    def __init__(self, message: str = "p2 is Q-type in every coordinate pair", trace: Optional[List[Dict[str, Any]]] = None):
        self.trace = list(trace or [])
        super().__init__(message, code="AllCoordinatesQType")


class QuadratureError(PhaseCertError):
    """Adaptive quadrature did not converge at the maximum refinement depth."""

    code = "QuadratureError"

    def __init__(self, message: str, last_value: complex = 0j, depth: int = 0):
        self.last_value = last_value
        self.depth = depth
        super().__init__(message)


class DiagnosticFormatter:
    """Formats failures as dicts with a severity and an actionable suggestion."""

    SUGGESTIONS = {
        "LinearPhase": {
            "message": "The family contains a degree-1 phase",
            "suggestion": "Drop the linear phase; linear terms can be absorbed by a modulation.",
        },
        "QuadraticIsQ": {
            "message": "p2 is a nonzero multiple of the quadratic form Q",
            "suggestion": "Remove the multiple of Q from p2; the kernel does not decay in that direction.",
        },
        "DimensionTooSmall": {
            "message": "The ambient dimension is below 2",
            "suggestion": "Use n >= 2; the change of variables needs a sigma coordinate.",
        },
        "NotHomogeneous": {
            "message": "A phase is not homogeneous of its declared degree",
            "suggestion": "Key every phase by its exact degree j and keep only degree-j monomials.",
        },
        "NoPhases": {
            "message": "Every phase polynomial is zero",
            "suggestion": "Provide at least one nonzero phase of degree >= 2.",
        },
        "DegenerateForm": {
            "message": "The quadratic form matrix is singular",
            "suggestion": "Supply a non-degenerate symmetric matrix or a list of +/-1 signs.",
        },
        "ConfigError": {
            "message": "The configuration could not be read",
            "suggestion": "Check the reported line against the family/run schema in the README.",
        },
        "PolyError": {
            "message": "A polynomial could not be parsed",
            "suggestion": "Write terms as 'coeff * u1^a1 u2^a2' with exact rational coefficients.",
        },
        "AllCoordinatesQType": {
            "message": "Case B2 found p2 Q-type in every coordinate pair",
            "suggestion": "This contradicts admissibility; rerun with the gate enabled.",
        },
        "QuadratureError": {
            "message": "Quadrature did not converge",
            "suggestion": "Raise max_depth or base_nodes, or loosen PHASECERT_QUAD_TOL.",
        },
    }

    @classmethod
    def format_error(
        cls,
        error_type: str,
        error_message: str,
        context: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """Format an error with its severity and suggestion."""
        context = context or {}
        info = cls.SUGGESTIONS.get(error_type, {})
        return {
            "error_type": error_type,
            "message": error_message,
            "severity": cls._determine_severity(error_type),
            "description": info.get("message", "An internal consistency check failed"),
            "suggestion": info.get("suggestion", "Report the certificate digest and the input config."),
            "context": context,
        }

    @classmethod
    def _determine_severity(cls, error_type: str) -> str:
        gate = {reason.value for reason in RejectionReason}
        if error_type in gate or error_type in {"ConfigError", "PolyError"}:
            return ErrorSeverity.ERROR.value
        if error_type == "QuadratureError":
            return ErrorSeverity.WARNING.value
        return ErrorSeverity.CRITICAL.value


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit status."""
    if isinstance(error, (AdmissibilityError, ConfigError, PolyError)):
        return 1
    return 2
