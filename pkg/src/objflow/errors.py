"""Exception types raised by objflow."""


class ObjflowError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ObjflowError, ValueError):
    """Two grids (masks, fields) that must agree in shape do not."""


class EmptyInputError(ObjflowError, ValueError):
    """An operation that needs at least one element received none."""


class UnresolvedIdError(ObjflowError, KeyError):
    """A match refers to a candidate id that is not present."""


class FloFormatError(ObjflowError, ValueError):
    """Malformed Middlebury ``.flo`` data."""


class BadMagicError(FloFormatError):
    pass


class TruncatedFloError(FloFormatError):
    pass


class BadFloDimensionsError(FloFormatError):
    pass


class PlacementError(ObjflowError, RuntimeError):
    """The scene generator could not place an object inside the canvas."""


class ConfigError(ObjflowError, ValueError):
    """Invalid configuration value or file."""


class MissingLevelError(ObjflowError, KeyError):
    """A configured pyramid level is absent from the base pyramid."""
