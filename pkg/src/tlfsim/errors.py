"""Exception types shared across the package."""


class TlfsimError(Exception):
    """Base class for all package errors."""


class DomainError(TlfsimError, ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation."""


class ConfigError(TlfsimError, ValueError):
    """Raised on malformed or inconsistent run configuration."""


class NumericsError(TlfsimError, RuntimeError):
    """Raised when a numerical kernel cannot reach its accuracy contract.

    Carries optional diagnostics about where the failure happened.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConvergenceError(NumericsError):
    """Iteration failed to converge; carries the last iterate and residual."""

    def __init__(self, message, last_iterate=None, residual=None, iterations=None):
        super().__init__(message, last_iterate=last_iterate, residual=residual,
                         iterations=iterations)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations
