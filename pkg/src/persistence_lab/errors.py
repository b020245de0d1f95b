"""Exception types shared across the package."""


class PersistenceLabError(Exception):
    """Base class for all package-specific errors."""


class DegenerateDistributionError(PersistenceLabError):
    """Coefficient distribution has zero variance and cannot be standardized."""


class DegenerateInputError(PersistenceLabError):
    """Structurally invalid input, e.g. the zero polynomial."""


class CapacityError(PersistenceLabError):
    """Input exceeds a documented size cap (e.g. Sturm degree limit)."""


class AccuracyError(PersistenceLabError):
    """A quadrature or summation could not reach the requested accuracy."""


class ConditioningError(PersistenceLabError):
    """Covariance factorization failed after maximal jitter escalation."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConstraintError(PersistenceLabError):
    """A deterministic certificate was called outside its preconditions."""


class PreconditionError(PersistenceLabError):
    """An empirical check's stated precondition failed."""


class InsufficientDataError(PersistenceLabError):
    """Too few usable data points for a fit."""


class InsufficientTrialsError(PersistenceLabError):
    """A Monte Carlo estimate came out exactly zero where positivity is needed."""

    def __init__(self, message, horizon=None):
        super().__init__(message)
        self.horizon = horizon


class ReliabilityError(PersistenceLabError):
    """Unknown-verdict rate exceeded the configured bound; carries partial results."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class EvaluationOverflowError(PersistenceLabError):
    """A normalized polynomial evaluation left the double range."""

    def __init__(self, message, u=None):
        super().__init__(message)
        self.u = u


class ConfigError(PersistenceLabError):
    """Invalid experiment configuration; carries every validation message."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
