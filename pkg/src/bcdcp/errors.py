"""Exception hierarchy shared by every module; the CLI maps each class to an exit code."""


class BcdcpError(Exception):
    exit_code = 1


class ConfigError(BcdcpError):
    """Malformed or incomplete run configuration."""

    exit_code = 2


class DomainError(BcdcpError):
    """Parameters outside the region where a formula or algorithm is valid."""

    exit_code = 3


class NumericFailure(BcdcpError):
    """A quadrature, ODE solve or root search did not reach its tolerance."""

    exit_code = 4

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate
