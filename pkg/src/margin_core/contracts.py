"""
Data contracts for margin_core: rasters, calibration, specimen, margins, similarity.

margin_core consumes GrayImage/BinaryMask and produces SpecimenExtraction,
MarginProfile, ClockMargins and SimilarityScores. No I/O; these are plain
dataclasses wrapping read-only numpy arrays (row-major, ``[row, col]``).
Points are always ``(x, y)`` = ``(col, row)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from margin_core.errors import CalibrationError, MarginError, RasterError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.flags.writeable = False
    return array


# ---------------------------------------------------------------------------
# Rasters
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit intensity raster, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise RasterError(f"GrayImage needs a nonempty 2-D buffer, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise RasterError("GrayImage intensities must lie in 0..255")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean foreground raster, shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise RasterError(f"BinaryMask needs a 2-D buffer, got shape {bits.shape}")
        object.__setattr__(self, "bits", _frozen(bits.astype(bool, copy=False)))

    @classmethod
    def empty(cls, height: int, width: int) -> BinaryMask:
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.bits))

    def is_empty(self) -> bool:
        return not self.bits.any()

    def complement(self) -> BinaryMask:
        return BinaryMask(~self.bits)


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Connected-component labels; 0 is background, components are 1..K.

    ``sizes[k - 1]`` is the pixel count of label ``k``.
    """

    labels: np.ndarray
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", _frozen(np.asarray(self.labels, dtype=np.int32)))
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))

    @property
    def count(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.labels.shape[0]), int(self.labels.shape[1]))

    def size(self, label: int) -> int:
        return self.sizes[label - 1]

    def component(self, label: int) -> BinaryMask:
        return BinaryMask(self.labels == label)

    def largest_label(self) -> int | None:
        """Label with the most pixels (lowest label on ties); None when empty."""
        if not self.sizes:
            return None
        return int(np.argmax(self.sizes)) + 1


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed 8-connected loop of boundary pixels, ``points[i] = (x, y)``."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def as_list(self) -> list[tuple[int, int]]:
        return [(int(x), int(y)) for x, y in self.points]


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Per-pixel Euclidean distance (px) to the nearest source pixel."""

    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=np.float64)))

    def at(self, x: int, y: int) -> float:
        return float(self.values[y, x])


@dataclass(frozen=True, eq=False)
class RgbImage:
    """8-bit colour raster, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise RasterError(f"RgbImage needs shape (h, w, 3), got {px.shape}")
        object.__setattr__(self, "pixels", _frozen(px.astype(np.uint8, copy=False)))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PixelDensity:
    """Linear scale in pixels per millimetre."""

    pixels_per_mm: float

    def __post_init__(self) -> None:
        value = float(self.pixels_per_mm)
        if not math.isfinite(value) or value <= 0:
            raise CalibrationError(f"pixels_per_mm must be positive and finite, got {self.pixels_per_mm}")
        object.__setattr__(self, "pixels_per_mm", value)


@dataclass(frozen=True)
class CoinDetection:
    """The reference coin found among the non-specimen components."""

    center: tuple[float, float]
    radius_px: float
    circularity: float
    label: int
    area_px: int


# ---------------------------------------------------------------------------
# Specimen
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpecimenExtraction:
    """Specimen mask, boundary and ROI box (inclusive) in full-frame coordinates."""

    mask: BinaryMask
    contour: Contour
    bbox: tuple[int, int, int, int]
    threshold: int

    @property
    def offset(self) -> tuple[int, int]:
        return (self.bbox[0], self.bbox[1])

    @property
    def roi_shape(self) -> tuple[int, int]:
        x0, y0, x1, y1 = self.bbox
        return (y1 - y0 + 1, x1 - x0 + 1)


# ---------------------------------------------------------------------------
# Margins
# ---------------------------------------------------------------------------


class Clock(str, Enum):
    """Stitch directions on the specimen, named by clock position."""

    TWELVE = "12"
    THREE = "3"
    SIX = "6"
    NINE = "9"


class ImageDirection(str, Enum):
    """Axis-aligned ray directions in image coordinates (y grows downward)."""

    UP = "up"
    RIGHT = "right"
    DOWN = "down"
    LEFT = "left"

    @property
    def step(self) -> tuple[int, int]:
        return _DIRECTION_STEPS[self]

    def rotated_clockwise(self, quarter_turns: int) -> ImageDirection:
        order = list(ImageDirection)
        return order[(order.index(self) + quarter_turns) % 4]


_DIRECTION_STEPS: dict[ImageDirection, tuple[int, int]] = {
    ImageDirection.UP: (0, -1),
    ImageDirection.RIGHT: (1, 0),
    ImageDirection.DOWN: (0, 1),
    ImageDirection.LEFT: (-1, 0),
}


@dataclass(frozen=True)
class SafetyPolicy:
    """Margins narrower than ``threshold_mm`` are flagged for caution."""

    threshold_mm: float = 10.0

    def __post_init__(self) -> None:
        if not self.threshold_mm > 0:
            raise MarginError(f"safety threshold must be positive, got {self.threshold_mm}")


@dataclass(frozen=True)
class MarginEntry:
    point: tuple[int, int]
    margin_mm: float
    caution: bool


@dataclass(frozen=True)
class MarginProfile:
    """Shortest tumor-to-resection distance for every tumor contour point."""

    entries: tuple[MarginEntry, ...]
    min_margin_mm: float
    threshold_mm: float
    tumor_contour: Contour
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class ClockMargins:
    """Ray widths (mm) at the four stitch directions; absent widths carry a reason."""

    widths_mm: dict[Clock, float | None]
    failures: dict[Clock, str] = field(default_factory=dict)
    origin: tuple[float, float] = (0.0, 0.0)

    def get(self, clock: Clock) -> float | None:
        return self.widths_mm.get(clock)

    def present(self) -> dict[Clock, float]:
        return {c: w for c, w in self.widths_mm.items() if w is not None}


@dataclass(frozen=True)
class DirectionStat:
    """Mean and sample standard deviation of absolute width differences (mm)."""

    mean_mm: float
    std_mm: float
    count: int


@dataclass(frozen=True)
class DirectionAgreement:
    """Automatic vs reference clock widths, per direction and pooled."""

    per_direction: dict[Clock, DirectionStat | None]
    overall: DirectionStat | None


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionCounts:
    """Pixel confusion counts with the manual mask as reference."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class SimilarityScores:
    """SI, OV, OF, EF; ``None`` where the denominator is zero."""

    si: float | None
    ov: float | None
    of: float | None
    ef: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {"si": self.si, "ov": self.ov, "of": self.of, "ef": self.ef}
