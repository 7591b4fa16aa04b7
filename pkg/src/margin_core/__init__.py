"""
margin-core: pure specimen-mammogram margin evaluation.

No I/O, no network, no side effects. Consumes GrayImage/BinaryMask rasters,
produces pixel density, specimen extraction, margin profiles, clock-direction
widths and similarity scores. Deterministic and unit-testable.
"""

from margin_core.contracts import (
    BinaryMask,
    Clock,
    ClockMargins,
    CoinDetection,
    ConfusionCounts,
    Contour,
    DirectionAgreement,
    DirectionStat,
    DistanceField,
    GrayImage,
    ImageDirection,
    LabelMap,
    MarginEntry,
    MarginProfile,
    PixelDensity,
    RgbImage,
    SafetyPolicy,
    SimilarityScores,
    SpecimenExtraction,
)
from margin_core.errors import MarginEngineError
from margin_core.pipeline import EvaluationParams, EvaluationResult, evaluate

__all__ = [
    "BinaryMask",
    "Clock",
    "ClockMargins",
    "CoinDetection",
    "ConfusionCounts",
    "Contour",
    "DirectionAgreement",
    "DirectionStat",
    "DistanceField",
    "evaluate",
    "EvaluationParams",
    "EvaluationResult",
    "GrayImage",
    "ImageDirection",
    "LabelMap",
    "MarginEngineError",
    "MarginEntry",
    "MarginProfile",
    "PixelDensity",
    "RgbImage",
    "SafetyPolicy",
    "SimilarityScores",
    "SpecimenExtraction",
]
