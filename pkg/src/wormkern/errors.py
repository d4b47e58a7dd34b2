"""Exception hierarchy shared by all modules."""


class WormkernError(Exception):
    """Base class for library errors."""


class InvalidParameter(WormkernError, ValueError):
    """Parameters violate a documented constraint (beta, h, tolerances)."""


class DomainViolation(WormkernError, ValueError):
    """A point lies outside the domain required by an operation."""


class AnnulusViolation(DomainViolation):
    """lambda lies outside the annulus where a geometric series converges."""


class DenominatorVanishes(WormkernError, ZeroDivisionError):
    """A closed form was evaluated on (or too near) one of its poles."""


class PoleLineCollision(InvalidParameter):
    """A contour shift lands on a row of poles of the mode integrand."""


class NumericFailure(WormkernError, ArithmeticError):
    """Base for numerical failures (quadrature, series, Monte Carlo)."""


class NonConvergent(NumericFailure):
    """The integral or series does not converge for the given input."""


class ToleranceNotMet(NumericFailure):
    """Adaptive refinement budget exhausted before reaching the tolerance."""


class TailNotSummable(NumericFailure):
    """Mode series ratio too close to 1 for the requested tolerance."""


class IntegrationUnstable(NumericFailure):
    """A Schur-test integral changed by more than the allowed amount under refinement."""


class NoValidB(WormkernError, ValueError):
    """The admissible window for the exponent b is empty."""
