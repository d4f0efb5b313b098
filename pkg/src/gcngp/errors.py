"""Exception types shared across the library."""


class GcnGpError(Exception):
    """Base class for all errors raised by this package."""


class EmptyGraphError(GcnGpError):
    """Graph has no edges, so the shift operator is undefined."""


class InvalidGError(GcnGpError):
    """Shift-operator weight g outside the open interval (0, 1)."""


class InvalidProbabilityError(GcnGpError):
    """Block-model edge probability outside [0, 1]."""


class SelfLoopError(GcnGpError):
    """Edge list contains a self loop."""


class ParseError(GcnGpError):
    """Malformed edge-list or config input."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class NonPsdInputError(GcnGpError):
    """Covariance input is not positive semidefinite within tolerance."""


class DimensionMismatchError(GcnGpError):
    """Array shapes are inconsistent."""


class NotConvergedError(GcnGpError):
    """Fixed-point iteration exhausted its layer budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class NotAFixedPointError(GcnGpError):
    """Linearization requested around a state that is not a fixed point."""


class NoConvergenceError(GcnGpError):
    """Scalar fixed-point or root search failed."""


class DefectiveSpectrumError(GcnGpError):
    """Eigenvector matrix too ill-conditioned for a mode decomposition."""


class InvalidBracketError(GcnGpError):
    """Bisection bracket endpoints do not straddle the transition."""


class NoRootError(GcnGpError):
    """No root of the transition condition inside the bracket."""


class SingularSystemError(GcnGpError):
    """Linear system too ill-conditioned to solve reliably."""
