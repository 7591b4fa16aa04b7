"""Overlay rendering: specimen boundary blue, tumor boundary red, caution band yellow."""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np
from scipy import ndimage as ndi

from margin_core.contracts import Contour, GrayImage, RgbImage
from margin_core.raster import disk

BLUE = (0, 0, 255)
RED = (255, 0, 0)
YELLOW = (255, 255, 0)
CAUTION_DILATION_PX = 2


def _points_mask(shape: tuple[int, int], points: Iterable[tuple[int, int]]) -> np.ndarray:
    h, w = shape
    mask = np.zeros(shape, dtype=bool)
    pts = np.asarray(list(points), dtype=np.int64).reshape(-1, 2)
    if pts.size:
        keep = (pts[:, 0] >= 0) & (pts[:, 0] < w) & (pts[:, 1] >= 0) & (pts[:, 1] < h)
        pts = pts[keep]
        mask[pts[:, 1], pts[:, 0]] = True
    return mask


def render_overlay(
    img: GrayImage,
    specimen_contour: Contour | None,
    tumor_contour: Contour | None,
    caution_points: Iterable[tuple[int, int]] = (),
) -> RgbImage:
    """Colour the boundaries and caution band onto the grayscale frame.

    Later layers win where they overlap: specimen, then tumor, then caution.
    Points outside the frame are skipped.
    """
    rgb = np.repeat(img.pixels[:, :, None], 3, axis=2).copy()
    if specimen_contour is not None:
        rgb[_points_mask(img.shape, specimen_contour.as_list())] = BLUE
    if tumor_contour is not None:
        rgb[_points_mask(img.shape, tumor_contour.as_list())] = RED
    caution = _points_mask(img.shape, caution_points)
    if caution.any():
        caution = ndi.binary_dilation(caution, structure=disk(CAUTION_DILATION_PX))
        rgb[caution] = YELLOW
    return RgbImage(rgb)
