"""Exception hierarchy shared by the library and the CLI.

Each error carries the process exit code the CLI maps it to.
"""

from __future__ import annotations


class SiegelError(Exception):
    exit_code = 1


class InvalidDigitError(SiegelError, ValueError):
    exit_code = 2


class NotQuadraticError(SiegelError, ValueError):
    exit_code = 2


class CFParseError(SiegelError, ValueError):
    """Malformed continued-fraction text; ``offset`` is the byte offset of the problem."""

    exit_code = 2

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class InvalidConfigError(SiegelError, ValueError):
    exit_code = 2


class DomainError(SiegelError, ValueError):
    exit_code = 2


class InsufficientPrecisionError(SiegelError, ArithmeticError):
    exit_code = 3


class PrecisionExhaustedError(SiegelError, ArithmeticError):
    exit_code = 3


class DivergenceError(SiegelError, ArithmeticError):
    """Iteration produced a non-finite value; ``index`` is the first bad step."""

    exit_code = 3

    def __init__(self, index: int):
        super().__init__(f"orbit became non-finite at step {index}")
        self.index = index


class TooFewLevelsError(SiegelError, ValueError):
    """Not enough closest returns for a lambda estimate (a configuration problem)."""

    exit_code = 2


class NonConvergenceError(SiegelError):
    exit_code = 4


class InsufficientSamplesError(SiegelError, ValueError):
    exit_code = 4


class OutputError(SiegelError, OSError):
    exit_code = 5


class NonConvergenceWarning(RuntimeWarning):
    pass
