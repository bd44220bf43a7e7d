"""Exception types raised across the package."""


class BubbleQuadError(Exception):
    """Base class for all package errors."""


class BubbleParseError(BubbleQuadError, ValueError):
    """Malformed multibubble description."""


class ZeroRetained(BubbleQuadError):
    """No generated point survived the in-domain filter."""


class PointOutsideBox(BubbleQuadError, ValueError):
    """A point lies outside the basis box beyond the allowed slack."""


class SingularTriangular(BubbleQuadError, ValueError):
    """Triangular factor with a (numerically) vanishing diagonal entry."""


class DegenerateCycle(BubbleQuadError):
    """The NNLS inner loop stopped making progress."""


class RankZero(BubbleQuadError):
    """The Vandermonde matrix vanishes numerically."""


class NonFiniteValue(BubbleQuadError, ValueError):
    """An integrand returned inf or nan at a node."""


class ResidualNotMet(BubbleQuadError):
    """Moment residual still above tolerance after using the whole point set.

    The partial :class:`~bubblequad.compress.CompressionReport` is attached as
    ``report`` for diagnosis.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
