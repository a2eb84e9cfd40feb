"""Exception hierarchy shared by all modules."""


class DiffspecError(Exception):
    """Base class for every error raised by the package."""


class DomainError(DiffspecError, ValueError):
    """A coefficient was evaluated outside its domain of definition."""


class KinkError(DiffspecError, ValueError):
    """A derivative was requested at a point where the coefficient is not C^1."""


class MetadataRequiredError(DiffspecError):
    """Asymptotic metadata is missing and numeric fallback was not permitted."""


class EvaluationError(DiffspecError, ArithmeticError):
    """A quadrature integrand produced a non-finite sample."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class InconclusiveError(DiffspecError):
    """An improper-integral classification could not be decided numerically."""


class CaseError(DiffspecError, ValueError):
    """An operation was applied to a problem in the wrong integral case."""


class ConditioningError(DiffspecError, ArithmeticError):
    """The discretized eigenproblem lost positive definiteness."""


class NumericalError(DiffspecError, ArithmeticError):
    """A numerical procedure exhausted its budget without converging."""
