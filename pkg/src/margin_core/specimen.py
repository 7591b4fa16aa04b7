"""
Specimen extraction: threshold -> largest component -> fill holes -> smooth -> boundary -> ROI.
"""

from __future__ import annotations

import logging

import numpy as np

from margin_core.contracts import BinaryMask, GrayImage, LabelMap, SpecimenExtraction
from margin_core.errors import SpecimenError
from margin_core.raster import (
    binarize,
    connected_components,
    fill_holes,
    largest_component,
    morphology,
    otsu_threshold,
    trace_boundary,
)

logger = logging.getLogger("margin.specimen")

DEFAULT_SMOOTH_RADIUS = 5
DEFAULT_PADDING = 16


def foreground_components(img: GrayImage, connectivity: int = 8) -> tuple[int, LabelMap]:
    """Otsu threshold and the component labels of the binarized frame."""
    t = otsu_threshold(img)
    labels = connected_components(binarize(img, t), connectivity)
    logger.debug("otsu threshold=%d components=%d", t, labels.count)
    return t, labels


def extract_specimen(
    img: GrayImage,
    smooth_radius: int = DEFAULT_SMOOTH_RADIUS,
    padding: int = DEFAULT_PADDING,
    connectivity: int = 8,
    *,
    components: tuple[int, LabelMap] | None = None,
) -> SpecimenExtraction:
    """Isolate the specimen as a single hole-free component with its boundary and ROI box.

    Parameters
    ----------
    img:
        Full specimen-mammogram frame.
    smooth_radius:
        Disk radius for the close-then-open boundary smoothing.
    padding:
        Pixels added around the tight bounding box (clipped to the frame).
    connectivity:
        Connectivity used for the largest-component selection.
    components:
        Precomputed ``(threshold, labels)`` from :func:`foreground_components`
        so coin detection and extraction share one label map.

    Raises
    ------
    SpecimenError
        "no specimen found" when nothing survives thresholding or smoothing.
    """
    if padding < 0:
        raise SpecimenError(f"padding must be >= 0, got {padding}")
    t, labels = components if components is not None else foreground_components(img, connectivity)
    label = labels.largest_label()
    if label is None:
        raise SpecimenError("no specimen found")

    mask = fill_holes(labels.component(label))
    if smooth_radius >= 1:
        mask = morphology(mask, "close", smooth_radius)
        mask = morphology(mask, "open", smooth_radius)
    # Smoothing can split thin necks or reopen notches; restore the invariants.
    mask = fill_holes(largest_component(mask, connectivity=8))
    if mask.is_empty():
        raise SpecimenError("no specimen found: smoothing removed the foreground")

    contour = trace_boundary(mask)
    rows, cols = np.nonzero(mask.bits)
    x0 = max(0, int(cols.min()) - padding)
    y0 = max(0, int(rows.min()) - padding)
    x1 = min(img.width - 1, int(cols.max()) + padding)
    y1 = min(img.height - 1, int(rows.max()) + padding)
    logger.info("specimen: area=%d px contour=%d pts bbox=(%d, %d, %d, %d) t=%d",
                mask.area, len(contour), x0, y0, x1, y1, t)
    return SpecimenExtraction(mask=mask, contour=contour, bbox=(x0, y0, x1, y1), threshold=t)


def crop_roi(img: GrayImage, extraction: SpecimenExtraction) -> GrayImage:
    """Sub-image of the ROI box with everything outside the specimen zeroed."""
    x0, y0, x1, y1 = extraction.bbox
    if x1 < x0 or y1 < y0:
        raise SpecimenError(f"degenerate bbox {extraction.bbox}")
    if x0 < 0 or y0 < 0 or x1 >= img.width or y1 >= img.height:
        raise SpecimenError(f"bbox {extraction.bbox} outside {img.width}x{img.height} frame")
    if extraction.mask.shape != img.shape:
        raise SpecimenError("specimen mask does not match the image frame")
    window = (slice(y0, y1 + 1), slice(x0, x1 + 1))
    roi = img.pixels[window].copy()
    roi[~extraction.mask.bits[window]] = 0
    return GrayImage(roi)


def crop_mask(mask: BinaryMask, extraction: SpecimenExtraction) -> BinaryMask:
    """Full-frame mask cut to the ROI box."""
    x0, y0, x1, y1 = extraction.bbox
    return BinaryMask(mask.bits[y0 : y1 + 1, x0 : x1 + 1])


def paste_roi_mask(
    roi_mask: BinaryMask,
    extraction: SpecimenExtraction,
    frame_shape: tuple[int, int],
) -> BinaryMask:
    """Place an ROI-space mask back into a full frame through the ROI offset."""
    if roi_mask.shape != extraction.roi_shape:
        raise SpecimenError(
            f"ROI mask shape {roi_mask.shape} does not match ROI box {extraction.roi_shape}"
        )
    x0, y0, x1, y1 = extraction.bbox
    full = np.zeros(frame_shape, dtype=bool)
    full[y0 : y1 + 1, x0 : x1 + 1] = roi_mask.bits
    return BinaryMask(full)
