"""Exception hierarchy shared by all modules."""


class TwaveError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class PreconditionError(TwaveError, ValueError):
    """Input outside the domain of an operation (e.g. supersonic speed)."""

    exit_code = 3


class NumericalError(TwaveError, ArithmeticError):
    """A quadrature or root solve failed to reach its tolerance."""

    exit_code = 5

    def __init__(self, message, interval=None, estimate=None, abserr=None):
        super().__init__(message)
        self.interval = interval
        self.estimate = estimate
        self.abserr = abserr


class NoTurningPoint(PreconditionError):
    """g(., c) has no admissible zero on the requested branch."""

    exit_code = 3


class UndecidableFiniteness(TwaveError):
    """Degenerate contact at the turning point; L(c) cannot be decided."""

    exit_code = 4


class DisagreementError(NumericalError):
    """Two independent evaluations of the same quantity disagree."""


class LiftingUnavailable(PreconditionError):
    """The modulus vanishes somewhere, so no phase lifting exists."""


class BoundaryNotNormalized(PreconditionError):
    """The field is not equal to 1 at the x-boundaries."""


class InsufficientSamples(TwaveError):
    """Not enough dispersion samples to build an envelope."""

    exit_code = 3


class AmplitudeTooLarge(PreconditionError):
    """Test-function modulus would become non-positive."""


class RhoUnderflow(TwaveError):
    """The modulus hit the floor during a 2D minimization."""

    exit_code = 5

    def __init__(self, message, field=None, iterations=None):
        super().__init__(message)
        self.field = field
        self.iterations = iterations


class MaxIterations(TwaveError):
    """A minimization exhausted its iteration budget."""

    exit_code = 5

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
