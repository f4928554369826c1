"""Exception types shared across the package."""


class VoronoiTailorError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(VoronoiTailorError):
    """Invalid geometric input (bad polygon, non-finite coordinate, ...)."""


class RegionError(VoronoiTailorError):
    """Region definition or region-file parsing failed."""


class DelaunayError(VoronoiTailorError):
    """Triangulation cannot be built (duplicate sites, ...)."""


class RegularityError(VoronoiTailorError):
    """The site configuration violates the regularity assumptions."""


class SingularityError(VoronoiTailorError):
    """A sensitivity matrix is not defined at this configuration.

    Carries the offending vertex location in ``vertex`` when known.
    """

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class MeritError(VoronoiTailorError):
    """A merit term cannot be evaluated on this diagram."""


class SpgError(VoronoiTailorError):
    """The optimizer hit a non-recoverable state.

    ``iterate`` holds the point at which the failure occurred.
    """

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate
