"""Exception types shared across the package; the CLI maps them to exit codes."""


class PackError(Exception):
    exit_code = 1


class InputError(PackError, ValueError):
    exit_code = 2


class ParameterError(PackError, ValueError):
    exit_code = 3


class BudgetError(PackError, RuntimeError):
    exit_code = 4


class InvariantError(PackError, AssertionError):
    """An internal guarantee did not hold; this signals a bug, not bad input."""
    exit_code = 5
