"""
Exception hierarchy for margin-engine.

Every failure the library raises derives from ``MarginEngineError`` so the
CLI can map it to exit code 1 in one place. Undefined similarity scores are
values (``None``), not errors.
"""


class MarginEngineError(Exception):
    """Base class for all margin-engine failures."""


class RasterError(MarginEngineError):
    """Invalid raster input or degenerate raster operation."""


class CalibrationError(MarginEngineError):
    """Pixel-density calibration failed."""


class CoinNotFoundError(CalibrationError):
    """No component large enough to be the reference coin."""


class NoCircularComponentError(CalibrationError):
    """Candidate components exist but none is circular enough."""


class SpecimenError(MarginEngineError):
    """Specimen extraction or ROI cropping failed."""


class MarginError(MarginEngineError):
    """Margin measurement received unusable masks."""


class SimilarityError(MarginEngineError):
    """Similarity scoring received incompatible masks."""
