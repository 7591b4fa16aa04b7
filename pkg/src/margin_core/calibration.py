"""
Pixel-density calibration from the 20 mm reference coin.

The specimen is always the largest foreground blob; labels, wedges and
markers are small or elongated. The coin is therefore the most circular
component among the remaining ones that are large enough.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import ndimage as ndi

from margin_core.contracts import BinaryMask, CoinDetection, GrayImage, LabelMap, PixelDensity
from margin_core.errors import CalibrationError, CoinNotFoundError, NoCircularComponentError
from margin_core.raster import contour_length, trace_boundary
from margin_core.specimen import foreground_components

logger = logging.getLogger("margin.calibration")

DEFAULT_COIN_DIAMETER_MM = 20.0
DEFAULT_MIN_AREA_PX = 500
DEFAULT_MIN_CIRCULARITY = 0.85


def circularity(area_px: int, perimeter_px: float) -> float:
    """4*pi*A / P^2 clamped to at most 1."""
    if perimeter_px <= 0:
        return 1.0
    return min(1.0, 4.0 * math.pi * area_px / (perimeter_px * perimeter_px))


def detect_coin(
    labels: LabelMap,
    min_area_px: int = DEFAULT_MIN_AREA_PX,
    min_circularity: float = DEFAULT_MIN_CIRCULARITY,
) -> CoinDetection:
    """Pick the most circular non-largest component with area >= *min_area_px*.

    Parameters
    ----------
    labels:
        Component labels of the thresholded frame (8-connectivity).
    min_area_px:
        Smaller components (stitch clips, marker glyphs) are ignored.
    min_circularity:
        Best candidate must reach this circularity.

    Raises
    ------
    CoinNotFoundError
        No candidate component survives the area filter.
    NoCircularComponentError
        Candidates exist but the best circularity is below *min_circularity*.
    """
    largest = labels.largest_label()
    candidates = [
        k for k in range(1, labels.count + 1)
        if k != largest and labels.size(k) >= min_area_px
    ]
    if not candidates:
        raise CoinNotFoundError(f"coin not found: no component other than the specimen has >= {min_area_px} px")

    slices = ndi.find_objects(labels.labels)
    best_label = -1
    best_circ = -1.0
    for k in candidates:
        crop = labels.labels[slices[k - 1]] == k
        contour = trace_boundary(BinaryMask(crop))
        circ = circularity(labels.size(k), contour_length(contour))
        logger.debug("component %d: area=%d circularity=%.3f", k, labels.size(k), circ)
        # Strict comparison keeps the lowest label on ties.
        if circ > best_circ:
            best_label, best_circ = k, circ

    if best_circ < min_circularity:
        raise NoCircularComponentError(
            f"no circular component: best circularity {best_circ:.3f} < {min_circularity}"
        )

    area = labels.size(best_label)
    rows, cols = np.nonzero(labels.labels == best_label)
    center = (float(cols.mean()), float(rows.mean()))
    radius = math.sqrt(area / math.pi)
    logger.info("coin: label=%d centre=(%.1f, %.1f) r=%.2f px circularity=%.3f",
                best_label, center[0], center[1], radius, best_circ)
    return CoinDetection(
        center=center,
        radius_px=radius,
        circularity=best_circ,
        label=best_label,
        area_px=area,
    )


def estimate_density(coin: CoinDetection, coin_diameter_mm: float = DEFAULT_COIN_DIAMETER_MM) -> PixelDensity:
    """pixels_per_mm = 2 * radius_px / coin_diameter_mm."""
    if not coin_diameter_mm > 0:
        raise CalibrationError(f"coin diameter must be positive, got {coin_diameter_mm}")
    return PixelDensity(2.0 * coin.radius_px / coin_diameter_mm)


def px_to_mm(d_px: float, density: PixelDensity) -> float:
    return d_px / density.pixels_per_mm


def mm_to_px(d_mm: float, density: PixelDensity) -> float:
    return d_mm * density.pixels_per_mm


def calibrate(
    img: GrayImage,
    *,
    coin_diameter_mm: float = DEFAULT_COIN_DIAMETER_MM,
    min_area_px: int = DEFAULT_MIN_AREA_PX,
    min_circularity: float = DEFAULT_MIN_CIRCULARITY,
    connectivity: int = 8,
    labels: LabelMap | None = None,
) -> tuple[CoinDetection, PixelDensity]:
    """Threshold, label, detect the coin and derive the density in one call.

    Pass *labels* to reuse the label map already computed for specimen
    extraction.
    """
    if labels is None:
        _, labels = foreground_components(img, connectivity)
    coin = detect_coin(labels, min_area_px=min_area_px, min_circularity=min_circularity)
    return coin, estimate_density(coin, coin_diameter_mm)
