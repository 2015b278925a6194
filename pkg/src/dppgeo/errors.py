"""Exception hierarchy. Every error carries a machine-readable ``kind`` used by the CLI."""


class DppGeoError(Exception):
    """Base class for all dppgeo errors."""

    kind = "error"


class ShapeError(DppGeoError, ValueError):
    """Input has the wrong shape (non-square, asymmetric, length mismatch)."""

    kind = "shape"


class DomainError(DppGeoError, ValueError):
    """Input is outside the mathematical domain (non-PD kernel, u outside model, ...)."""

    kind = "domain"


class CapacityError(DppGeoError, ValueError):
    """Ground set too large for an enumeration-backed operation."""

    kind = "capacity"


class ConvergenceError(DppGeoError, RuntimeError):
    """Iterative solver failed to converge; carries the final residual."""

    kind = "convergence"

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DegeneratePointError(DppGeoError, RuntimeError):
    """Metric or Jacobian is rank-deficient beyond tolerance at this point."""

    kind = "degenerate"


class PreconditionError(DppGeoError, ValueError):
    """A documented precondition of the operation does not hold."""

    kind = "precondition"
