"""
Exception hierarchy for the csRKN toolkit.

Everything raised on purpose by the library derives from CsRknError so that
callers (and the CLI) can separate expected failures from programming bugs.
"""

from typing import Optional


class CsRknError(Exception):
    """Base class for all library errors."""


class DegreeLimitError(CsRknError, ValueError):
    """A Legendre degree exceeds the configured cap."""

    def __init__(self, degree: int, max_degree: int, what: str = "degree"):
        self.degree = degree
        self.max_degree = max_degree
        super().__init__(f"{what} {degree} exceeds the configured maximum degree {max_degree}")


class UnsupportedOrderError(CsRknError, ValueError):
    """No symplectic family is available for the requested order."""


class UnsupportedSizeError(CsRknError, ValueError):
    """Quadrature size outside the supported range."""


class AssumptionViolationError(CsRknError, ValueError):
    """A hypothesis required by a reduced condition list does not hold."""

    def __init__(self, hypothesis: str, residual: float):
        self.hypothesis = hypothesis
        self.residual = residual
        super().__init__(f"assumption violated: {hypothesis} (residual {residual:.3e})")


class UnsupportedFamilyError(CsRknError, ValueError):
    """A parametric family is not affine in its parameters."""


class InvalidTableauError(CsRknError, ValueError):
    """Inconsistent RKN tableau arrays; field names the offending array."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class TableauFormatError(CsRknError, ValueError):
    """Malformed tableau document; field_path points at the offending field."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        self.message = message
        super().__init__(f"{field_path}: {message}")


class ConfigurationError(CsRknError, ValueError):
    """Invalid value in the environment or .env file."""


class VerificationFailure(CsRknError):
    """A verification report came back with failed checks."""


class NumericalFailureError(CsRknError, RuntimeError):
    """Base class for failures of a numerical procedure."""


class ConvergenceError(NumericalFailureError):
    """An iteration did not reach its tolerance."""

    def __init__(self, message: str, last_residual: float = float("nan"),
                 iterations: int = 0, step_index: Optional[int] = None):
        self.last_residual = last_residual
        self.iterations = iterations
        self.step_index = step_index
        self.detail = message
        super().__init__(self._render())

    def _render(self) -> str:
        prefix = f"step {self.step_index}: " if self.step_index is not None else ""
        return f"{prefix}{self.detail} (last residual {self.last_residual:.3e} after {self.iterations} iterations)"

    def at_step(self, step_index: int) -> "ConvergenceError":
        """Return a copy tagged with the index of the failing step."""
        return ConvergenceError(self.detail, self.last_residual, self.iterations, step_index)


class LinearSolveError(NumericalFailureError):
    """A linear system (Newton matrix, mass matrix) is singular."""


class OracleFailureError(NumericalFailureError):
    """The reference oracle did not settle within its refinement budget."""


class CollisionError(NumericalFailureError):
    """Evaluation of a singular force at (or extremely near) its pole."""
