"""Exception types raised across the package."""


class OrbitLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(OrbitLabError, ValueError):
    pass


class SizeMismatch(DimensionMismatch):
    pass


class ShapeError(OrbitLabError, ValueError):
    pass


class NotSquare(ShapeError):
    pass


class NotSymmetric(OrbitLabError, ValueError):
    pass


class InfiniteGroup(OrbitLabError):
    """A finite-group operation was requested for a continuous family."""


class FiniteGroup(OrbitLabError):
    """A continuous-group operation was requested for a finite family."""


class TooLarge(OrbitLabError):
    pass


class InvalidAction(OrbitLabError, ValueError):
    """A group action descriptor violates its invariants."""


class UnsupportedFamily(OrbitLabError, ValueError):
    pass


class UnsupportedSignature(OrbitLabError, ValueError):
    pass


class EmptyGlueSet(OrbitLabError, ValueError):
    pass


class NotEquivariant(OrbitLabError):
    pass


class PropertyCheckFailed(OrbitLabError):
    pass


class NotInvolution(PropertyCheckFailed):
    pass


class NotOrder3(PropertyCheckFailed):
    pass


class BadMix(OrbitLabError, ValueError):
    pass


class NoValidPairs(OrbitLabError):
    pass


class ConfigError(OrbitLabError, ValueError):
    """Raised for malformed experiment configs; ``key`` names the offender."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
