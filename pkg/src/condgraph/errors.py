"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CondGraphError(Exception):
    exit_code = 1


class ParseError(CondGraphError):
    """Malformed input file or configuration."""

    exit_code = 2

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(loc + message)


class ConfigError(CondGraphError):
    exit_code = 2


class InfeasibleError(CondGraphError):
    """Constraints admit no graph, or the instance cannot be sampled."""

    exit_code = 3


class FrozenStateError(InfeasibleError):
    """No vertex can start a walk: the reference set is a single graph."""


class InvariantViolation(CondGraphError):
    """An internal consistency check failed (a bug, or an unguarded case)."""

    exit_code = 4


class ViabilityError(CondGraphError, ValueError):
    """An edge swap was requested that is not viable on the current graph."""


class DomainError(CondGraphError, ValueError):
    """Input outside the domain of an operation (e.g. a statistic)."""

    exit_code = 2


class ConvergenceError(CondGraphError, RuntimeError):
    def __init__(self, message, discrepancy):
        self.discrepancy = discrepancy
        super().__init__(f"{message} (last discrepancy {discrepancy:.3g})")


class CapExceededError(CondGraphError):
    pass


class UndersampledError(CondGraphError, ValueError):
    pass
