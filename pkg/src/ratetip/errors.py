"""Exception hierarchy shared by the numerical modules."""


class RateTipError(Exception):
    """Base class for all package errors."""


class InvalidParameters(RateTipError, ValueError):
    """A parameter record violates its invariants."""


class SingularFold(RateTipError, ArithmeticError):
    """Reduced flow evaluated at (or too close to) the fold singularity."""


class IntegrationFailure(RateTipError):
    """Base class for failures raised by the ODE integrator."""


class StepBudgetExceeded(IntegrationFailure):
    pass


class StepUnderflow(IntegrationFailure):
    """Required step dropped below ``h_min``; usually means stiffness."""


class NonFiniteState(IntegrationFailure):
    pass


class OutOfRange(RateTipError, ValueError):
    """Dense output requested outside the integrated interval."""


class BracketFailure(RateTipError):
    """No sign-changing bracket could be established for a root search."""


class NoSignChange(BracketFailure):
    pass


class NoConvergence(RateTipError):
    """Iteration budget exhausted without meeting the tolerance."""


class InsufficientData(RateTipError, ValueError):
    pass
