"""Exception types shared across the library.

Each error class marks a distinct failure family so callers (and the CLI)
can map them to distinct exit codes.
"""


class TiltzoError(Exception):
    """Base class for all library errors."""


class DimensionError(TiltzoError, ValueError):
    """A vector or matrix has an invalid or mismatched dimension."""


class ConfigurationError(TiltzoError, ValueError):
    """An option combination is invalid (e.g. bias correction with k < 2)."""


class EvaluationError(TiltzoError, ArithmeticError):
    """An objective evaluation produced a non-finite value.

    ``query_index`` identifies the offending perturbation query when the
    failure happened inside an estimator or optimizer step.
    """

    def __init__(self, message, query_index=None):
        super().__init__(message)
        self.query_index = query_index


class AdmissibilityError(TiltzoError, ValueError):
    """A tilt/scale/curvature combination leaves the analytic domain.

    Raised when 1 - t*rho^2*lambda_i <= 0 for some eigenvalue; carries the
    violating index and eigenvalue.
    """

    def __init__(self, message, index=None, eigenvalue=None):
        super().__init__(message)
        self.index = index
        self.eigenvalue = eigenvalue


class NumericError(TiltzoError, ArithmeticError):
    """An iterative numeric routine failed to converge; carries the residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
