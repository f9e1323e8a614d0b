"""Exception types shared across the package."""


class SmoltError(Exception):
    """Base class; carries a short machine-parsable code."""

    code = "ERROR"


class DomainError(SmoltError):
    """Numeric input outside an operation's domain (negative rate, NaN, ...)."""

    code = "DOMAIN"


class ValidationError(SmoltError):
    """Structurally invalid data, config or policy."""

    code = "INVALID"


class ConvergenceError(SmoltError):
    """An MCMC stage failed its convergence gate."""

    code = "CONVERGENCE"

    def __init__(self, message, stage=None, details=None):
        super().__init__(message)
        self.stage = stage
        self.details = details or {}


class PipelineError(SmoltError):
    """Pipeline orchestration failure (bad bindings, missing stage output)."""

    code = "PIPELINE"
