"""Exception types shared across the package.

The CLI maps each class onto a process exit code.
"""


class MulticommonError(Exception):
    exit_code = 1


class ConfigError(MulticommonError, ValueError):
    exit_code = 2


class CapExceeded(MulticommonError):
    """An enumeration would visit more tuples than the configured cap."""

    exit_code = 3


class NoConstruction(MulticommonError):
    exit_code = 4


class InequalityViolation(MulticommonError):
    exit_code = 5

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance
