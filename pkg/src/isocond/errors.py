"""Exception hierarchy for the isocond package."""


class IsocondError(Exception):
    """Base class for every error raised by isocond."""


class InvalidGeometry(IsocondError, ValueError):
    pass


class NonPositiveLink(InvalidGeometry):
    pass


class NegativeBase(InvalidGeometry):
    pass


class NonFinite(IsocondError, ValueError):
    pass


class ZeroMatrix(IsocondError, ValueError):
    pass


class NoAssembly(IsocondError):
    """The distal links cannot reach each other for the given actuated angles."""


class SingularAssembly(IsocondError):
    """C and D coincide, or the distal links are flattened."""


class Unreachable(IsocondError):
    pass


class OnSerialSingularity(IsocondError):
    """The requested inverse-kinematic branch sits on a serial singularity.

    The degenerate posture is attached as ``posture`` so callers that sample
    boundaries can still use it.
    """

    def __init__(self, message, posture=None):
        super().__init__(message)
        self.posture = posture


class ParallelSingular(IsocondError):
    pass


class InvalidLevel(IsocondError, ValueError):
    pass


class EmptyGenerator(IsocondError):
    pass


class InvalidMesh(IsocondError, ValueError):
    pass


class InvalidStyle(IsocondError, ValueError):
    pass


class WriteFailure(IsocondError, OSError):
    pass
