"""Exception types shared across the toolkit."""


class MlidriveError(Exception):
    """Base class; ``exit_code`` is what the CLI returns."""

    exit_code = 1


class ConfigError(MlidriveError, ValueError):
    exit_code = 2


class InfeasibleError(MlidriveError):
    """A design or operating point violates a constraint."""

    exit_code = 3

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class EnvelopeError(InfeasibleError, ValueError):
    """Operating point outside the motor envelope or voltage limit."""


class DataError(MlidriveError, ValueError):
    exit_code = 4


class ThermalRunaway(InfeasibleError):
    """Electro-thermal fixed point does not exist or was not reached."""

    def __init__(self, message):
        super().__init__(message, constraint="thermal")
