"""Exception types raised by the solver, the geometry layer and the checks."""


class EqpError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(EqpError, ValueError):
    pass


class NonConvergence(EqpError, RuntimeError):
    pass


class DenominatorNonPositive(EqpError, ValueError):
    """A fractional denominator c.x + d fell to (or below) the guard value."""


class NonFiniteIterate(EqpError, FloatingPointError):
    pass


class SamplingFailure(EqpError, RuntimeError):
    pass


class DegenerateDenominator(EqpError, ValueError):
    pass


class NonPolyhedralSet(EqpError, ValueError):
    pass


class DimensionTooLarge(EqpError, ValueError):
    pass


class MaxPivots(EqpError, RuntimeError):
    """Simplex exceeded its pivot budget. With Bland's rule this means a bug."""


class DegenerateDraw(EqpError, ValueError):
    pass


class InstanceFormatError(EqpError, ValueError):
    """Malformed instance or set record; the message names the offending field."""


class SubproblemFailure(EqpError, RuntimeError):
    """The frozen linear-fractional subproblem was infeasible or unbounded."""
