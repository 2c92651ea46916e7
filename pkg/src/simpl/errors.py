"""Exception hierarchy shared by all simpl modules."""


class SimplError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SimplError):
    """A configuration document could not be parsed."""


class ValidationError(SimplError):
    """A value violates a documented invariant (names the offending field)."""


class MeshFormatError(SimplError):
    """A mesh file exists but could not be interpreted."""


class GenerationError(SimplError):
    """Scene or image generation failed at runtime."""


class PlacementError(GenerationError):
    """Object placement could not reach the requested density."""

    def __init__(self, message, achieved=0, target=0):
        super().__init__(message)
        self.achieved = achieved
        self.target = target


class SamplingError(GenerationError):
    """Property sampling failed (pathological distribution parameters)."""
