"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter or input lies outside the documented domain."""


class NumericError(ArithmeticError):
    """A numerical routine failed to converge.

    `index` identifies the offending eigenvalue (and, for batch runs,
    `replica` the offending draw).
    """

    def __init__(self, message, index=None, replica=None):
        super().__init__(message)
        self.index = index
        self.replica = replica


class ConfigError(ValueError):
    """A configuration file could not be parsed or validated."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
