"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the support of a function."""


class ParameterError(ValueError):
    """Invalid distribution or model parameters."""


class UnboundedRatioError(ArithmeticError):
    """The target/proposal density ratio cannot be bounded.

    Raised when the proposal (or its lower bound) vanishes where the target
    still carries mass, i.e. the proposal does not dominate the target.
    """


class SamplingError(RuntimeError):
    """A speculative sampling round failed; the message carries round context."""
