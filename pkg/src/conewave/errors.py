"""Exception hierarchy shared by all conewave modules."""


class ConewaveError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ConewaveError):
    """Invalid build parameters: unknown family, out-of-window values, bad fields."""


class DataError(ConewaveError):
    """Malformed input data: bad polygons, non-monotone grids, broken traces."""


class GeometryError(ConewaveError):
    """A geometric construction failed (wrong root count, degenerate tangents, ...)."""


class NumericError(ConewaveError):
    """A numeric routine lost its footing (singular tensor, no bracket, ...).

    Carries an optional ``site`` payload describing where it happened.
    """

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site
