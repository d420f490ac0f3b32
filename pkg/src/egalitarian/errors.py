"""Exception types shared across the package."""

from __future__ import annotations


class InvariantError(AssertionError):
    """A structural invariant failed at runtime.

    Raised by the always-on checks inside the flow engine and the mechanism.
    Never expected on valid input: seeing one means a bug.
    """


class InfeasibleInstance(ValueError):
    pass


class ContractViolation(ValueError):
    pass


class UnequalTotals(ValueError):
    pass


class TooLarge(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


class GenerationExhausted(RuntimeError):
    pass


def ensure(condition: bool, message: str) -> None:
    # not `assert`: these checks must survive `python -O`
    if not condition:
        raise InvariantError(message)
