"""Exception hierarchy shared by every module."""


class GGMechError(Exception):
    """Base class for toolkit errors."""

    exit_code = 1


class DomainError(GGMechError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 2


class ConfigurationError(GGMechError, ValueError):
    """A mechanism or experiment specification is inconsistent."""

    exit_code = 2


class IngestionError(GGMechError):
    """Input data could not be read or parsed."""

    exit_code = 3


class ConvergenceError(GGMechError, RuntimeError):
    """A numerical solver failed to bracket or converge."""

    exit_code = 4


class NoSolutionError(ConvergenceError):
    """The requested target lies outside the achievable range."""


class OutputError(GGMechError):
    """A result file could not be written."""

    exit_code = 1
