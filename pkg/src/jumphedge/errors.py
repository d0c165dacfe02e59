"""Exception hierarchy shared by all modules."""


class JumpHedgeError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(JumpHedgeError, ValueError):
    """An input object violates one of its invariants."""


class NoSolution(JumpHedgeError):
    """A first-order condition has no root in the admissible interval."""


class WrongMeasure(JumpHedgeError, ValueError):
    """The jump measure does not have the shape a closed form requires."""


class DomainError(JumpHedgeError, ValueError):
    """Post-jump wealth (or a weight base) would be nonpositive."""


class UnsupportedMethod(JumpHedgeError, ValueError):
    pass


class GridError(JumpHedgeError):
    """A jump image leaves the grid and extrapolation is disabled."""


class NumericalError(JumpHedgeError):
    pass


class NegativeIntensity(JumpHedgeError, ValueError):
    pass


class OutOfBounds(JumpHedgeError, ValueError):
    """An option price lies outside its no-arbitrage bounds."""


class LatticeError(JumpHedgeError):
    pass


class NoBracket(JumpHedgeError):
    pass


class PathBlowup(JumpHedgeError):
    """Too many simulated wealth paths crossed zero."""

    def __init__(self, message, count=0):
        super().__init__(message)
        self.count = count


class UnknownFigure(JumpHedgeError, ValueError):
    pass
