"""Exception hierarchy shared by all levelgeom modules."""


class LevelGeomError(Exception):
    """Base class for every error raised by levelgeom."""


class DomainError(LevelGeomError):
    """A point (or stencil) lies outside the region where a field is C^2."""


class ParseError(LevelGeomError):
    """Malformed field expression.

    ``offset`` is the 0-based character position of the offending token.
    """

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class NearCriticalError(LevelGeomError):
    """Gradient norm fell below the numerical-critical floor."""


class NotMorseError(LevelGeomError):
    """A critical point with a (numerically) singular Hessian was found."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message)


class TopologyError(LevelGeomError):
    """Mesh is not a closed edge-manifold."""


class PreconditionError(LevelGeomError):
    """An identity's hypotheses are not met for the requested configuration."""


class ConfigError(LevelGeomError):
    """Invalid user configuration (bad flags, inconsistent dimensions, ...)."""
