"""Exception hierarchy shared by the whole package.

The CLI maps these onto distinct exit codes, so new failure modes should
subclass one of the categories below rather than raising bare exceptions.
"""


class PhenosignError(Exception):
    """Base class for all package errors."""


class GraphFormatError(PhenosignError):
    """Malformed or inconsistent graph/feature file contents."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConflictingSignError(GraphFormatError):
    """The same (gene, phenotype) pair appears with opposite signs."""


class IsolatedNodeError(PhenosignError):
    """A degree-zero node was found where the operation forbids one."""


class ConvergenceError(PhenosignError):
    """An iterative solver hit its iteration cap before the tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericalError(PhenosignError):
    """Non-finite values appeared where finite arithmetic was expected."""


class ConfigError(PhenosignError):
    """Invalid hyperparameter, policy or experiment configuration."""


class InterfaceError(PhenosignError):
    """A call violated an internal interface contract (wrong count/order)."""


class UndefinedMetricError(PhenosignError):
    """The requested metric is undefined on the given inputs."""
