"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` for bad input
(CLI exit status 1) and :class:`NumericalError` for computations that could
not deliver a trustworthy number (CLI exit status 2).
"""


class TunnelChronoError(Exception):
    """Base class for all package errors."""


class ValidationError(TunnelChronoError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(TunnelChronoError, ArithmeticError):
    """A numerical method failed to produce a reliable result."""


class EvaluationError(NumericalError):
    """A user function returned a non-finite value."""


class ToleranceError(NumericalError):
    """Requested tolerance not reached; ``estimate`` holds the best value found."""

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


class BracketError(ValidationError):
    """Root bracket without a sign change."""


class DegenerateFitError(NumericalError):
    """Normal equations of a least-squares fit are singular."""


class NonConvergenceError(NumericalError):
    """Iteration cap reached; ``result`` holds the best parameters found."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


class ClosedChannelError(ValidationError):
    """Energy at or below an asymptotic potential level."""


class DegenerateSegmentError(ValidationError):
    """Energy coincides with a constant-potential segment height.

    The linear (zero-wavenumber) solution is not implemented; perturb the
    energy by about 1e-9 eV.
    """


class PhaseUnwrapError(NumericalError):
    """Phase jumps by too much across a differentiation stencil."""


class RegimeError(ValidationError):
    """Bias outside the intermediate-voltage regime of the Simmons formula."""
