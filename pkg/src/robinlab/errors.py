"""Exception hierarchy shared by all robinlab modules."""


class RobinLabError(Exception):
    """Base class for every error raised by robinlab."""


class TooFewVertices(RobinLabError, ValueError):
    pass


class NotConvex(RobinLabError, ValueError):
    pass


class Degenerate(RobinLabError, ValueError):
    pass


class NonUnitDirection(RobinLabError, ValueError):
    pass


class NegativeOffset(RobinLabError, ValueError):
    pass


class BadParameter(RobinLabError, ValueError):
    pass


class NonPositiveInput(RobinLabError, ValueError):
    pass


class OutOfDomain(RobinLabError, ValueError):
    pass


class NoConvergence(RobinLabError, RuntimeError):
    pass


class MeshTooFine(RobinLabError, RuntimeError):
    pass


class MeshError(RobinLabError, RuntimeError):
    """The mesh generator produced a mesh that violates its invariants."""


class NonMonotoneSequence(RobinLabError, ValueError):
    pass
