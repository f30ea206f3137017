"""Exception types shared across mottlab.

The CLI maps each class to its own exit code (see ``mottlab.cli.EXIT_CODES``).
"""


class MottlabError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(MottlabError, ValueError):
    """A physical parameter is non-finite, has the wrong sign, or is otherwise unusable."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(MottlabError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class OutOfRegimeError(DomainError):
    """Inputs violate the asymptotic regime the formula assumes (e.g. nu >= 2 I0)."""


class ConfigurationError(MottlabError, ValueError):
    """Grid, box or tabulation settings cannot deliver the requested accuracy."""


class NumericFailure(MottlabError, RuntimeError):
    """Quadrature, root bracketing or a fit did not converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message)


class BroadeningError(ConfigurationError):
    """Broadening width too large for the frequency (eta must not exceed nu/5)."""


class IllConditionedFit(NumericFailure):
    """Least-squares design matrix too ill-conditioned, or data too noisy, for a fit."""

    def __init__(self, message, condition):
        self.condition = condition
        super().__init__(f"{message}; condition number {condition:.3e}")
