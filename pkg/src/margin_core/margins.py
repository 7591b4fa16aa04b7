"""
Margin evaluation: shortest tumor-to-resection distance per boundary point,
ray widths at the four stitch directions, and the caution region.

The specimen exterior (plus everything beyond the frame edge) is the
distance source; a tumor contour point's margin is its exact Euclidean
distance to that exterior, converted to millimetres.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable

import numpy as np

from margin_core.calibration import px_to_mm
from margin_core.contracts import (
    BinaryMask,
    Clock,
    ClockMargins,
    DirectionAgreement,
    DirectionStat,
    DistanceField,
    ImageDirection,
    MarginEntry,
    MarginProfile,
    PixelDensity,
    SafetyPolicy,
)
from margin_core.errors import MarginError
from margin_core.raster import connected_components, distance_transform, trace_boundary

logger = logging.getLogger("margin.margins")

CLOCK_ORDER: tuple[Clock, ...] = (Clock.TWELVE, Clock.THREE, Clock.SIX, Clock.NINE)


def prepare_tumor(tumor: BinaryMask, specimen: BinaryMask) -> tuple[BinaryMask, list[str]]:
    """Validate the mask pair and reduce the tumor to one component inside the specimen.

    Returns the cleaned tumor mask and the warnings raised along the way.

    Raises
    ------
    MarginError
        Shape mismatch, empty specimen, or "no tumor mask".
    """
    if tumor.shape != specimen.shape:
        raise MarginError(f"tumor mask {tumor.shape} and specimen mask {specimen.shape} differ in shape")
    if specimen.is_empty():
        raise MarginError("empty specimen mask")
    if tumor.is_empty():
        raise MarginError("no tumor mask")

    warnings: list[str] = []
    clipped = tumor.bits & specimen.bits
    outside = int(np.count_nonzero(tumor.bits & ~specimen.bits))
    if outside:
        msg = f"clipped {outside} tumor pixels outside the specimen"
        logger.warning(msg)
        warnings.append(msg)
    if not clipped.any():
        raise MarginError("no tumor mask: tumor lies entirely outside the specimen")

    labels = connected_components(BinaryMask(clipped), connectivity=8)
    if labels.count > 1:
        msg = f"tumor mask has {labels.count} components; keeping the largest"
        logger.warning(msg)
        warnings.append(msg)
        return labels.component(labels.largest_label()), warnings
    return BinaryMask(clipped), warnings


def exterior_distance(specimen: BinaryMask) -> DistanceField:
    """Distance (px) from each pixel to the specimen exterior; beyond-frame counts as exterior."""
    padded = np.pad(specimen.complement().bits, 1, constant_values=True)
    field = distance_transform(BinaryMask(padded))
    return DistanceField(field.values[1:-1, 1:-1])


def margin_profile(
    tumor: BinaryMask,
    specimen: BinaryMask,
    density: PixelDensity,
    policy: SafetyPolicy | None = None,
) -> MarginProfile:
    """Margin in mm at every tumor contour point, flagged against the safety threshold."""
    policy = policy or SafetyPolicy()
    tumor, warnings = prepare_tumor(tumor, specimen)
    contour = trace_boundary(tumor)
    field = exterior_distance(specimen)

    points = contour.as_list()
    margins_mm = [field.at(x, y) / density.pixels_per_mm for x, y in points]
    entries = tuple(
        MarginEntry(point=(x, y), margin_mm=m, caution=m < policy.threshold_mm)
        for (x, y), m in zip(points, margins_mm)
    )
    min_mm = min(margins_mm)
    logger.info("margin profile: %d points, min=%.2f mm, %d below %.1f mm",
                len(entries), min_mm, sum(e.caution for e in entries), policy.threshold_mm)
    return MarginProfile(
        entries=entries,
        min_margin_mm=min_mm,
        threshold_mm=policy.threshold_mm,
        tumor_contour=contour,
        warnings=tuple(warnings),
    )


def caution_region(profile: MarginProfile, policy: SafetyPolicy | None = None) -> list[tuple[int, int]]:
    """Contour points whose margin is below the threshold."""
    threshold = policy.threshold_mm if policy is not None else profile.threshold_mm
    return [e.point for e in profile.entries if e.margin_mm < threshold]


def clock_direction(clock: Clock, twelve_oclock: ImageDirection = ImageDirection.UP) -> ImageDirection:
    """Image direction of *clock* when 12 o'clock points along *twelve_oclock*."""
    return twelve_oclock.rotated_clockwise(CLOCK_ORDER.index(clock))


def _march(
    tumor: np.ndarray,
    specimen: np.ndarray,
    origin: tuple[int, int],
    step: tuple[int, int],
) -> tuple[int | None, int | None]:
    """Walk a ray; return (last tumor index, first exterior index), None when not met."""
    h, w = tumor.shape
    x, y = origin
    dx, dy = step
    last_tumor: int | None = None
    k = 0
    while 0 <= x < w and 0 <= y < h:
        if not specimen[y, x]:
            return last_tumor, k
        if tumor[y, x]:
            last_tumor = k
        x += dx
        y += dy
        k += 1
    return last_tumor, None


def clock_margins(
    tumor: BinaryMask,
    specimen: BinaryMask,
    density: PixelDensity,
    twelve_oclock: ImageDirection = ImageDirection.UP,
) -> ClockMargins:
    """Ray widths from the tumor centroid at 12, 3, 6 and 9 o'clock.

    Width is measured pixel-edge to pixel-edge: the gap between the last
    tumor pixel and the first specimen-exterior pixel along the ray.
    """
    tumor, _ = prepare_tumor(tumor, specimen)
    rows, cols = np.nonzero(tumor.bits)
    cx, cy = float(cols.mean()), float(rows.mean())
    origin = (int(math.floor(cx + 0.5)), int(math.floor(cy + 0.5)))

    widths: dict[Clock, float | None] = {}
    failures: dict[Clock, str] = {}
    for clock in CLOCK_ORDER:
        direction = clock_direction(clock, twelve_oclock)
        last_tumor, first_exterior = _march(tumor.bits, specimen.bits, origin, direction.step)
        if first_exterior is None:
            widths[clock] = None
            failures[clock] = f"ray toward {direction.value} left the frame inside the specimen"
        elif last_tumor is None:
            widths[clock] = None
            failures[clock] = f"ray toward {direction.value} never crossed the tumor"
        else:
            widths[clock] = px_to_mm(first_exterior - last_tumor - 1, density)
    for clock, reason in failures.items():
        logger.warning("%s o'clock: %s", clock.value, reason)
    return ClockMargins(widths_mm=widths, failures=failures, origin=(cx, cy))


def _stat(values: list[float]) -> DirectionStat | None:
    if not values:
        return None
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return DirectionStat(mean_mm=float(arr.mean()), std_mm=std, count=int(arr.size))


def margin_agreement(pairs: Iterable[tuple[ClockMargins, ClockMargins]]) -> DirectionAgreement:
    """Per-direction mean +/- SD of |automatic - reference| widths.

    Directions missing on either side of a pair are skipped for that pair.
    """
    diffs: dict[Clock, list[float]] = {c: [] for c in CLOCK_ORDER}
    for auto, reference in pairs:
        for clock in CLOCK_ORDER:
            a, r = auto.get(clock), reference.get(clock)
            if a is not None and r is not None:
                diffs[clock].append(abs(a - r))
    pooled = [d for clock in CLOCK_ORDER for d in diffs[clock]]
    return DirectionAgreement(
        per_direction={c: _stat(diffs[c]) for c in CLOCK_ORDER},
        overall=_stat(pooled),
    )
