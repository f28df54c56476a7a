"""Exceptions raised throughout :mod:`ercfuse`.

Everything subclasses a built-in exception so callers that only care about
the broad category (e.g., ``ValueError``) can keep catching that. The CLI
maps these to its exit codes (see :func:`ercfuse.utils.handle_errors`).

"""

from typing import Any


class ShapeError(ValueError):
    """Tensor shapes are incompatible for an operation."""


class DegenerateRowError(ValueError):
    """A softmax row has every entry masked out (an isolated attention query)."""


class ConfigError(ValueError):
    """A hyperparameter, profile, or dimension setting is invalid."""


class ValidationError(ValueError):
    """A dataset violates one of its invariants."""


class ParseError(ValueError):
    """A dataset file line could not be parsed."""


class StateError(ValueError):
    """Optimizer state doesn't match the parameters it's applied to."""


class ContractError(ValueError):
    """A function was called with arguments violating its preconditions."""


class NumericalError(RuntimeError):
    """Non-finite values appeared during a forward pass or training.

    Args:
        message: Human-readable description.
        diagnostics: Extra context (epoch, batch, gradient norms, ...)
            included in the string form of the error.

    """

    #: Context captured at the time of failure.
    diagnostics: dict[str, Any]

    def __init__(self, message: str, /, *, diagnostics: None | dict[str, Any] = None):
        self.diagnostics = diagnostics or {}
        if self.diagnostics:
            details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
            message = f"{message} ({details})"
        super().__init__(message)
