"""Exception types raised by cartanflow."""


class CartanflowError(Exception):
    """Base class for all library errors."""


class ShapeMismatch(CartanflowError, ValueError):
    pass


class UnsupportedFamily(CartanflowError, ValueError):
    pass


class MembershipError(CartanflowError, ValueError):
    """A matrix is not (numerically) an element of the family's p-space."""


class SolverFailure(CartanflowError, RuntimeError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NearSingularPoint(CartanflowError, ArithmeticError):
    """Raised when the root gap falls below the requested threshold."""

    def __init__(self, message, t=None, gap=None):
        super().__init__(message)
        self.t = t
        self.gap = gap


class NotInImage(CartanflowError, ValueError):
    pass


class NotCommuting(CartanflowError, ValueError):
    pass


# spelling used for the projection-consistency check in pointwise derivatives
NonCommuting = NotCommuting


class NotInChamber(CartanflowError, ValueError):
    pass


class OutOfDomain(CartanflowError, ValueError):
    pass


class TooLarge(CartanflowError, ValueError):
    pass


class ClusterMismatch(CartanflowError, RuntimeError):
    pass


class UnknownName(CartanflowError, KeyError):
    pass


class MatchAmbiguous(UserWarning):
    """Two or more Weyl elements realize the same matching cost."""
