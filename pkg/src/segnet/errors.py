"""Network-side failures; both derive from MarginEngineError so the CLI maps them to exit 1."""

from margin_core.errors import MarginEngineError


class ShapeError(MarginEngineError):
    """Tensor shapes are incompatible with the requested layer operation."""


class WeightsFormatError(MarginEngineError):
    """A weights file is malformed or does not match the network architecture."""
