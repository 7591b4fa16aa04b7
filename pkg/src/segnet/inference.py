"""Tumor prediction on an ROI: resize -> argmax -> map back -> largest component -> erosion."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from margin_core.contracts import BinaryMask, GrayImage
from margin_core.raster import largest_component, morphology, resample
from segnet.network import Network

logger = logging.getLogger("margin.segnet.inference")

EMPTY_PREDICTION = "empty prediction"


@dataclass(frozen=True)
class PredictionResult:
    mask: BinaryMask
    warning: str | None = None

    @property
    def is_empty(self) -> bool:
        return self.mask.is_empty()


def predict_tumor_mask(net: Network, roi: GrayImage, erosion_radius: int = 1) -> PredictionResult:
    """Segment the tumor in *roi*; the mask is returned at ROI resolution.

    An empty argmax foreground yields an empty mask plus the
    ``"empty prediction"`` warning rather than an error.
    """
    size = net.spec.input_size
    x = resample(roi.pixels, (size, size), order=1) / 255.0
    probs = net.predict_proba(x[None, None].astype(net.dtype))[0]
    back = np.stack([resample(probs[k], roi.shape, order=1) for k in range(probs.shape[0])])
    fg = BinaryMask(back.argmax(axis=0) == 1)

    if fg.is_empty():
        logger.warning("network predicted no tumor pixels")
        return PredictionResult(BinaryMask.empty(*roi.shape), EMPTY_PREDICTION)

    mask = largest_component(fg, connectivity=8)
    if erosion_radius >= 1:
        mask = morphology(mask, "erode", erosion_radius)
    if mask.is_empty():
        logger.warning("tumor prediction vanished under erosion radius %d", erosion_radius)
        return PredictionResult(mask, EMPTY_PREDICTION)
    return PredictionResult(mask)


def segmenter(net: Network, erosion_radius: int = 1):
    """Adapter to the evaluation pipeline's ``ROI -> (mask, warning)`` callable."""

    def _segment(roi: GrayImage) -> tuple[BinaryMask, str | None]:
        result = predict_tumor_mask(net, roi, erosion_radius)
        return result.mask, result.warning

    return _segment
