"""Exception hierarchy shared by every module of the package."""


class PFrameError(Exception):
    """Base class for all errors raised by :mod:`pframes`."""


class InputError(PFrameError, ValueError):
    """Malformed input: wrong shapes, non-finite entries, bad exponents."""


class DegenerateSpaceError(PFrameError):
    """Dependent anchors, or an anchor span that leaves no complement."""


class DegenerateInputError(PFrameError):
    """An input for which the requested quantity is 0/0 or otherwise vacuous."""


class UnboundedFunctionalError(PFrameError):
    """Coefficient vector with a component along the anchor span."""


class NotAFrameError(PFrameError):
    """The operation needs a positive lower frame bound."""


class PreconditionError(PFrameError):
    """A documented precondition of the operation does not hold."""


class NumericError(PFrameError, ArithmeticError):
    """Objective produced a non-finite value during optimization."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
