"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so modules should raise the
most specific class that applies rather than bare ValueError.
"""


class Spin1ForgeError(Exception):
    """Base class for all package errors."""


class ConfigError(Spin1ForgeError):
    """Bad input file, malformed parameter, or violated precondition."""


class ResourceError(ConfigError):
    """Requested problem size exceeds the supported range."""


class SingularityError(Spin1ForgeError):
    """A denominator hit an exact (or numerically exact) resonance."""


class ConvergenceError(Spin1ForgeError):
    """An iterative solver exhausted its budget without converging."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
