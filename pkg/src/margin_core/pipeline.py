"""
Evaluation orchestrator: calibrate -> extract specimen -> segment -> margins -> render.

Single entry point for evaluating one specimen mammogram. The tumor comes
either from a precomputed full-frame mask or from a segmentation callable
working in ROI space; this module never imports the network package.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field

from margin_core.calibration import calibrate
from margin_core.contracts import (
    BinaryMask,
    ClockMargins,
    CoinDetection,
    GrayImage,
    ImageDirection,
    MarginProfile,
    PixelDensity,
    RgbImage,
    SafetyPolicy,
    SpecimenExtraction,
)
from margin_core.errors import MarginError
from margin_core.margins import caution_region, clock_margins, margin_profile, prepare_tumor
from margin_core.overlay import render_overlay
from margin_core.specimen import crop_roi, extract_specimen, foreground_components, paste_roi_mask

logger = logging.getLogger("margin.pipeline")

Segmenter = Callable[[GrayImage], tuple[BinaryMask, str | None]]
"""ROI image -> (ROI-space tumor mask, optional warning)."""

StageCallback = Callable[[str, float], None]


@dataclass(frozen=True)
class EvaluationParams:
    smooth_radius: int = 5
    padding: int = 16
    connectivity: int = 8
    coin_diameter_mm: float = 20.0
    min_area_px: int = 500
    min_circularity: float = 0.85
    threshold_mm: float = 10.0
    twelve_oclock: ImageDirection = ImageDirection.UP


@dataclass(frozen=True)
class EvaluationResult:
    """Complete output of one evaluation; every stage's product is kept for reporting."""

    density: PixelDensity
    density_source: str
    coin: CoinDetection | None
    specimen: SpecimenExtraction
    roi: GrayImage
    tumor: BinaryMask
    tumor_source: str
    profile: MarginProfile
    clock: ClockMargins
    caution_points: list[tuple[int, int]]
    overlay: RgbImage
    threshold_mm: float
    warnings: tuple[str, ...] = ()
    stage_ms: dict[str, float] = field(default_factory=dict)
    duration_s: float = 0.0

    @property
    def positive_margin(self) -> bool:
        return self.profile.min_margin_mm < self.threshold_mm


class _StageTimer:
    def __init__(self, on_stage: StageCallback | None) -> None:
        self.timings: dict[str, float] = {}
        self._on_stage = on_stage

    def run(self, name: str, fn: Callable[[], object]):
        t0 = time.perf_counter()
        out = fn()
        ms = (time.perf_counter() - t0) * 1000.0
        self.timings[name] = ms
        logger.debug("stage %s: %.1f ms", name, ms)
        if self._on_stage is not None:
            self._on_stage(name, ms)
        return out


def evaluate(
    img: GrayImage,
    params: EvaluationParams | None = None,
    *,
    density: PixelDensity | None = None,
    tumor_mask: BinaryMask | None = None,
    segment: Segmenter | None = None,
    on_stage: StageCallback | None = None,
) -> EvaluationResult:
    """Run the whole margin evaluation on one frame.

    Parameters
    ----------
    img:
        Full specimen-mammogram frame.
    params:
        Algorithm parameters; defaults when omitted.
    density:
        Density override; coin detection is skipped when given.
    tumor_mask:
        Full-frame tumor mask (mask-ingestion mode).
    segment:
        ROI segmenter (model mode). Exactly one of *tumor_mask* / *segment*.
    on_stage:
        Called with ``(stage, duration_ms)`` after each stage.

    Raises
    ------
    MarginEngineError
        Any stage failure (no coin, no specimen, no tumor, ...).
    """
    if (tumor_mask is None) == (segment is None):
        raise MarginError("provide exactly one of a tumor mask or a segmenter")
    params = params or EvaluationParams()
    policy = SafetyPolicy(params.threshold_mm)
    timer = _StageTimer(on_stage)
    warnings: list[str] = []
    started = time.perf_counter()

    components = timer.run("threshold", lambda: foreground_components(img, params.connectivity))
    specimen: SpecimenExtraction = timer.run(
        "specimen",
        lambda: extract_specimen(img, params.smooth_radius, params.padding, params.connectivity,
                                 components=components),
    )

    coin: CoinDetection | None = None
    if density is not None:
        density_source = "override"
    else:
        coin, density = timer.run(
            "calibrate",
            lambda: calibrate(img, coin_diameter_mm=params.coin_diameter_mm,
                              min_area_px=params.min_area_px,
                              min_circularity=params.min_circularity,
                              labels=components[1]),
        )
        density_source = "coin"

    roi = crop_roi(img, specimen)
    if tumor_mask is not None:
        if tumor_mask.shape != img.shape:
            raise MarginError(f"tumor mask {tumor_mask.shape} does not match image {img.shape}")
        raw_tumor = tumor_mask
        tumor_source = "mask"
    else:
        roi_mask, warning = timer.run("segment", lambda: segment(roi))
        if warning:
            warnings.append(warning)
        raw_tumor = paste_roi_mask(roi_mask, specimen, img.shape)
        tumor_source = "model"

    def _margins() -> tuple[BinaryMask, MarginProfile, ClockMargins]:
        tumor, prep_warnings = prepare_tumor(raw_tumor, specimen.mask)
        warnings.extend(prep_warnings)
        profile = margin_profile(tumor, specimen.mask, density, policy)
        clock = clock_margins(tumor, specimen.mask, density, params.twelve_oclock)
        warnings.extend(f"{c.value} o'clock: {r}" for c, r in clock.failures.items())
        return tumor, profile, clock

    tumor, profile, clock = timer.run("margins", _margins)
    caution = caution_region(profile, policy)
    overlay = timer.run(
        "render", lambda: render_overlay(img, specimen.contour, profile.tumor_contour, caution)
    )
    duration = time.perf_counter() - started
    logger.info("evaluation done in %.2f s: min margin %.2f mm (%s)", duration,
                profile.min_margin_mm, "POSITIVE" if profile.min_margin_mm < policy.threshold_mm else "clear")

    return EvaluationResult(
        density=density,
        density_source=density_source,
        coin=coin,
        specimen=specimen,
        roi=roi,
        tumor=tumor,
        tumor_source=tumor_source,
        profile=profile,
        clock=clock,
        caution_points=caution,
        overlay=overlay,
        threshold_mm=policy.threshold_mm,
        warnings=tuple(warnings),
        stage_ms=timer.timings,
        duration_s=duration,
    )
