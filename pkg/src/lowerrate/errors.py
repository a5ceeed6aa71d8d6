"""Exception hierarchy shared by the engine and mapped to CLI exit codes."""


class EngineError(Exception):
    """Base class for every error raised on purpose by lowerrate."""

    exit_code = 1


class DomainError(EngineError, ValueError):
    """An argument lies outside the domain of the function being evaluated."""

    exit_code = 2


class ParameterError(EngineError, ValueError):
    """A constant or window parameter violates its admissible range."""

    exit_code = 2


class RegimeError(EngineError):
    """A regime hypothesis (e.g. d1 > d4) required by a result does not hold."""

    exit_code = 2


class DegenerateWindowError(EngineError, ValueError):
    exit_code = 2


class UnsupportedOperation(EngineError):
    exit_code = 2


class InconclusiveError(EngineError):
    """Numerical evidence does not decide convergence one way or the other."""

    exit_code = 3


class ConfigError(EngineError):
    exit_code = 2
