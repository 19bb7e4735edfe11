from __future__ import annotations

from typing import Any, NoReturn, TypeVar

from expression import Result


_TSource = TypeVar("_TSource")


class LshmcError(Exception):
    """Base class for all errors raised by the sampler library."""


class SpecError(LshmcError, ValueError):
    """A target spec, step size or configuration value was rejected."""


class InvalidStateError(LshmcError, ArithmeticError):
    """A position, velocity or energy became non-finite.

    The iteration index is attached when the failure happens inside a
    chain so that a long run can be replayed up to the offending step.
    """

    def __init__(self, message: str, iteration: int | None = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class ConvergenceError(LshmcError):
    """The accelerated minimizer exhausted its iteration cap."""

    def __init__(self, message: str, iterations: int, grad_norm: float):
        super().__init__(f"{message} after {iterations} iterations, |grad| = {grad_norm:.3e}")
        self.iterations = iterations
        self.grad_norm = grad_norm


class ClaimCheckFailed(LshmcError):
    """A diagnostic bound was violated."""


def reject(message: str) -> NoReturn:
    """Raise a `SpecError` with the given message."""
    raise SpecError(message)


def unwrap(result: Result[_TSource, Any]) -> _TSource:
    """Return the Ok value or raise the carried error.

    Non-exception errors are wrapped in `LshmcError`.
    """
    match result:
        case Result(tag="ok", ok=value):
            return value
        case Result(error=BaseException() as error):
            raise error
        case Result(error=error):
            raise LshmcError(str(error))


__all__ = [
    "ClaimCheckFailed",
    "ConvergenceError",
    "InvalidStateError",
    "LshmcError",
    "SpecError",
    "reject",
    "unwrap",
]
