"""Exception types shared across the package."""


class HomoglabError(Exception):
    """Base class for all package-specific failures."""


class NonElliptic(HomoglabError):
    """Raised when a coefficient fails the uniform ellipticity check."""


class NoConvergence(HomoglabError):
    """Raised when an iterative linear solve misses its residual target."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConfigError(HomoglabError):
    """Raised for invalid study/CLI configuration (exit code 2)."""
