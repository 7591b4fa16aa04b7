"""
Raster primitives shared by every downstream stage.

Thresholding, component labelling, hole filling, disk morphology, Moore
boundary tracing and the exact Euclidean distance transform. All functions
are pure: they take immutable rasters and return new ones.
"""

from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np
from scipy import ndimage as ndi

from margin_core.contracts import BinaryMask, Contour, DistanceField, GrayImage, LabelMap
from margin_core.errors import RasterError

logger = logging.getLogger("margin.raster")

MorphOp = Literal["erode", "dilate", "open", "close"]

# Clockwise ring around a pixel with y pointing down: N, NE, E, SE, S, SW, W, NW.
_RING: tuple[tuple[int, int], ...] = (
    (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1),
)
_RING_INDEX = {offset: i for i, offset in enumerate(_RING)}
_WEST = 6


# ---------------------------------------------------------------------------
# Thresholding
# ---------------------------------------------------------------------------


def otsu_threshold(img: GrayImage) -> int:
    """Level ``t`` maximising between-class variance, class 0 = intensity <= t.

    Scores are compared exactly in integer arithmetic; the smallest ``t``
    wins ties. A constant image returns its single intensity.
    """
    hist = np.bincount(img.pixels.ravel(), minlength=256)
    present = np.flatnonzero(hist)
    if present.size == 1:
        return int(present[0])

    counts = [int(c) for c in hist]
    total_n = sum(counts)
    total_s = sum(i * c for i, c in enumerate(counts))

    best_t = 0
    best_num, best_den = 0, 1
    n0 = s0 = 0
    for t in range(256):
        n0 += counts[t]
        s0 += t * counts[t]
        n1 = total_n - n0
        if n0 == 0 or n1 == 0:
            continue
        s1 = total_s - s0
        # sigma_b^2 is proportional to (s0*n1 - s1*n0)^2 / (n0*n1)
        num = (s0 * n1 - s1 * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def binarize(img: GrayImage, t: int) -> BinaryMask:
    """Foreground iff intensity > t."""
    return BinaryMask(img.pixels > t)


# ---------------------------------------------------------------------------
# Components and holes
# ---------------------------------------------------------------------------


def _structure(connectivity: int) -> np.ndarray:
    if connectivity not in (4, 8):
        raise RasterError(f"connectivity must be 4 or 8, got {connectivity}")
    return ndi.generate_binary_structure(2, 1 if connectivity == 4 else 2)


def connected_components(mask: BinaryMask, connectivity: int = 8) -> LabelMap:
    """Dense labels 1..K in raster-scan order of each component's first pixel."""
    labels, count = ndi.label(mask.bits, structure=_structure(connectivity))
    if count > 1:
        flat = labels.ravel()
        fg = np.flatnonzero(flat)
        _, first = np.unique(flat[fg], return_index=True)
        remap = np.zeros(count + 1, dtype=labels.dtype)
        remap[1:][np.argsort(fg[first], kind="stable")] = np.arange(1, count + 1, dtype=labels.dtype)
        labels = remap[labels]
    sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    return LabelMap(labels=labels, sizes=tuple(sizes.tolist()))


def largest_component(mask: BinaryMask, connectivity: int = 8) -> BinaryMask:
    """Largest component (lowest label on ties); an empty mask stays empty."""
    labels = connected_components(mask, connectivity)
    label = labels.largest_label()
    if label is None:
        return BinaryMask.empty(*mask.shape)
    return labels.component(label)


def fill_holes(mask: BinaryMask) -> BinaryMask:
    """Background not 4-connected to the image border becomes foreground."""
    return BinaryMask(ndi.binary_fill_holes(mask.bits, structure=_structure(4)))


# ---------------------------------------------------------------------------
# Morphology
# ---------------------------------------------------------------------------


def disk(radius: int) -> np.ndarray:
    """Discrete disk structuring element {dx^2 + dy^2 <= r^2}."""
    r = int(radius)
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return (xx * xx + yy * yy) <= r * r


def _erode(bits: np.ndarray, element: np.ndarray) -> np.ndarray:
    return ndi.binary_erosion(bits, structure=element, border_value=0)


def _dilate(bits: np.ndarray, element: np.ndarray) -> np.ndarray:
    return ndi.binary_dilation(bits, structure=element, border_value=0)


def morphology(mask: BinaryMask, op: MorphOp, radius: int) -> BinaryMask:
    """Binary erosion/dilation/opening/closing with a disk; outside the frame is background."""
    if radius < 1:
        raise RasterError(f"morphology radius must be >= 1, got {radius}")
    element = disk(radius)
    bits = mask.bits
    if op == "erode":
        out = _erode(bits, element)
    elif op == "dilate":
        out = _dilate(bits, element)
    elif op == "open":
        out = _dilate(_erode(bits, element), element)
    elif op == "close":
        out = _erode(_dilate(bits, element), element)
    else:
        raise RasterError(f"unknown morphology op: {op!r}")
    return BinaryMask(out)


# ---------------------------------------------------------------------------
# Boundary tracing
# ---------------------------------------------------------------------------


def trace_boundary(mask: BinaryMask) -> Contour:
    """Moore-neighbour trace of a single 8-connected component, clockwise.

    Starts at the top-most, then left-most foreground pixel.

    Raises
    ------
    RasterError
        "no foreground" on an empty mask, "ambiguous boundary" when the mask
        holds more than one 8-connected component.
    """
    labels = connected_components(mask, connectivity=8)
    if labels.count == 0:
        raise RasterError("no foreground")
    if labels.count > 1:
        raise RasterError(f"ambiguous boundary: mask has {labels.count} components")

    grid = np.pad(mask.bits, 1, constant_values=False)
    rows, cols = np.nonzero(grid)
    # np.nonzero walks in raster order, so the first hit is top-most then left-most.
    start = (int(cols[0]), int(rows[0]))

    def scan(current: tuple[int, int], back_dir: int) -> tuple[tuple[int, int], int] | None:
        cx, cy = current
        for step in range(1, 9):
            k = (back_dir + step) % 8
            dx, dy = _RING[k]
            if grid[cy + dy, cx + dx]:
                bx, by = _RING[(k - 1) % 8]
                nxt = (cx + dx, cy + dy)
                # Backtrack re-expressed relative to the pixel we move to.
                rel = (cx + bx - nxt[0], cy + by - nxt[1])
                return nxt, _RING_INDEX[rel]
        return None

    first = scan(start, _WEST)
    if first is None:
        return Contour(np.array([[start[0] - 1, start[1] - 1]]))

    points = [start]
    current, back_dir = first
    limit = 4 * grid.size + 8
    while True:
        step = scan(current, back_dir)
        if step is None:  # pragma: no cover - impossible for a multi-pixel component
            raise RasterError("boundary trace lost contact with the component")
        if current == start and step[0] == first[0]:
            break
        points.append(current)
        current, back_dir = step
        if len(points) > limit:  # pragma: no cover
            raise RasterError("boundary trace did not close")

    pts = np.asarray(points, dtype=np.int64) - 1
    return Contour(pts)


def contour_length(contour: Contour) -> float:
    """Chain-code length of the closed loop: 1 per axial step, sqrt(2) per diagonal."""
    if len(contour) < 2:
        return 0.0
    pts = contour.points
    steps = np.abs(pts - np.roll(pts, -1, axis=0)).sum(axis=1)
    diagonal = int(np.count_nonzero(steps == 2))
    axial = len(contour) - diagonal
    return axial + diagonal * math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Distance transform and resampling
# ---------------------------------------------------------------------------


def distance_transform(source: BinaryMask) -> DistanceField:
    """Exact Euclidean distance (px) from every pixel to the nearest source pixel."""
    if source.is_empty():
        raise RasterError("empty distance source")
    return DistanceField(ndi.distance_transform_edt(~source.bits))


def resample(array: np.ndarray, out_shape: tuple[int, int], order: int = 1) -> np.ndarray:
    """Pixel-centre aligned resize of a 2-D array.

    ``order=1`` is bilinear (float output), ``order=0`` nearest (dtype kept).
    Samples beyond the edge clamp to the border.
    """
    src = np.asarray(array)
    if src.ndim != 2:
        raise RasterError(f"resample expects a 2-D array, got shape {src.shape}")
    in_h, in_w = src.shape
    out_h, out_w = int(out_shape[0]), int(out_shape[1])
    if out_h < 1 or out_w < 1:
        raise RasterError(f"invalid resample shape {out_shape}")
    if (in_h, in_w) == (out_h, out_w):
        return src.astype(np.float64) if order == 1 else src.copy()

    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    if order == 0:
        iy = np.clip(np.floor(yy + 0.5).astype(np.int64), 0, in_h - 1)
        ix = np.clip(np.floor(xx + 0.5).astype(np.int64), 0, in_w - 1)
        return src[iy, ix]
    return ndi.map_coordinates(src.astype(np.float64), [yy, xx], order=1, mode="nearest")
