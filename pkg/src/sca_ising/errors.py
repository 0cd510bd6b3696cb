"""Exception types shared across the package."""


class ScaIsingError(Exception):
    """Base class for all errors raised by this package."""


class ModelFormatError(ScaIsingError, ValueError):
    """A model description (file or payload) is malformed."""


class DimensionMismatchError(ScaIsingError, ValueError):
    """An array argument does not match the model's vertex count."""


class CapacityError(ScaIsingError, ValueError):
    """An exact computation would exceed the configured size cap."""


class DegenerateModelError(ScaIsingError, ValueError):
    """The requested quantity is undefined for this model (e.g. all-zero couplings and fields)."""
