"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures
onto its documented status codes without a lookup table.
"""


class FluidModelError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


# validation / domain problems -> exit code 2

class ValidationError(FluidModelError):
    exit_code = 2


class DomainError(ValidationError):
    """An argument lies outside the domain of a formula."""


class UnstableModel(ValidationError):
    """The offered load violates lambda/(lambda+1) < c/N < 1."""


class IntegerServiceRate(ValidationError):
    """The output rate c is an integer, which the model excludes."""


class BranchUnavailable(DomainError):
    """A ray does not reach the requested z on the requested branch."""


class SingularPoint(DomainError):
    """The point is too close to the corner (0, gamma) for ray inversion."""


class LayerRegion(DomainError):
    """The point lies in a guard band owned by a layer formula."""


class SZero(DomainError):
    """The ray parameter is too close to zero (transition curve)."""


class PoleError(DomainError):
    """Gamma function evaluated at a nonpositive integer."""


class RangeError(DomainError):
    """Special-function argument outside the supported range."""


# numerical failures -> exit code 3

class NumericalError(FluidModelError):
    exit_code = 3


class NoConvergence(NumericalError):
    pass


class TruncationNotConverged(NumericalError):
    pass


class QuadratureNotConverged(NumericalError):
    pass


class CausticError(NumericalError):
    pass


class SingularLog(NumericalError):
    pass


class EigenCountMismatch(NumericalError):
    pass


class ComplexSpectrum(NumericalError):
    pass


class SingularBCSystem(NumericalError):
    pass


class InsufficientCycles(NumericalError):
    pass
