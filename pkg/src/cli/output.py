"""
Report building and human-readable output for the terminal.

Every CLI command uses these formatters. The journal receives the same data.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema

from margin_core.contracts import Clock, ClockMargins, DirectionAgreement, DirectionStat, SpecimenExtraction
from margin_core.margins import CLOCK_ORDER
from margin_core.pipeline import EvaluationResult
from margin_core.similarity import ScoreSummary

# ---------------------------------------------------------------------------
# Evaluation report
# ---------------------------------------------------------------------------


def build_report(result: EvaluationResult) -> dict[str, Any]:
    """Report JSON for one evaluation; ``min_margin_mm`` is the library value, unrounded."""
    report: dict[str, Any] = {
        "pixels_per_mm": result.density.pixels_per_mm,
        "clock_margins_mm": {c.value: result.clock.get(c) for c in CLOCK_ORDER},
        "clock_failures": {c.value: reason for c, reason in result.clock.failures.items()},
        "min_margin_mm": result.profile.min_margin_mm,
        "caution_point_count": len(result.caution_points),
        "safety_threshold_mm": result.threshold_mm,
        "positive_margin": result.positive_margin,
        "density_source": result.density_source,
        "tumor_source": result.tumor_source,
        "warnings": list(result.warnings),
        "stage_ms": {k: round(v, 3) for k, v in result.stage_ms.items()},
        "duration_s": round(result.duration_s, 4),
    }
    if result.coin is not None:
        report["coin"] = coin_dict(result.coin)
    return report


def coin_dict(coin) -> dict[str, Any]:
    return {
        "center": [coin.center[0], coin.center[1]],
        "radius_px": coin.radius_px,
        "circularity": coin.circularity,
        "area_px": coin.area_px,
        "label": coin.label,
    }


def validate_report(report: dict[str, Any], schema_path: str | Path) -> None:
    """Check *report* against the report JSON Schema; ValueError on mismatch."""
    schema = json.loads(Path(schema_path).read_text())
    try:
        jsonschema.validate(instance=report, schema=schema)
    except jsonschema.ValidationError as exc:
        raise ValueError(f"report failed schema validation: {exc.message}") from exc


def contour_polygon(extraction: SpecimenExtraction) -> dict[str, Any]:
    return {
        "type": "polygon",
        "points": [[x, y] for x, y in extraction.contour.as_list()],
        "bbox": list(extraction.bbox),
        "threshold": extraction.threshold,
    }


def clock_margins_from_report(report: dict[str, Any]) -> ClockMargins:
    """Read the ``clock_margins_mm`` block of an evaluation (or reference) report."""
    raw = report.get("clock_margins_mm")
    if not isinstance(raw, dict):
        raise ValueError("report has no clock_margins_mm object")
    widths: dict[Clock, float | None] = {}
    for clock in CLOCK_ORDER:
        value = raw.get(clock.value)
        widths[clock] = None if value is None else float(value)
    return ClockMargins(widths_mm=widths)


def _stat_dict(stat: DirectionStat | None) -> dict[str, Any] | None:
    if stat is None:
        return None
    return {"mean_mm": stat.mean_mm, "std_mm": stat.std_mm, "count": stat.count}


def agreement_dict(agreement: DirectionAgreement) -> dict[str, Any]:
    return {
        "per_direction": {c.value: _stat_dict(s) for c, s in agreement.per_direction.items()},
        "overall": _stat_dict(agreement.overall),
    }


def summary_dict(summary: ScoreSummary) -> dict[str, Any]:
    return {
        **summary.means,
        "case_count": summary.case_count,
        "undefined_count": summary.undefined_count,
    }


# ---------------------------------------------------------------------------
# Terminal formatting
# ---------------------------------------------------------------------------


def _mm(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f} mm"


def format_evaluation(result: EvaluationResult, source: str) -> str:
    """Full evaluation summary: calibration, specimen, tumor, margins, verdict."""
    lines = [f"=== Margin evaluation: {source} ==="]
    if result.coin is not None:
        c = result.coin
        lines.append(f"Density      : {result.density.pixels_per_mm:.3f} px/mm "
                     f"(coin r={c.radius_px:.1f} px, circularity {c.circularity:.3f})")
    else:
        lines.append(f"Density      : {result.density.pixels_per_mm:.3f} px/mm (override)")
    x0, y0, x1, y1 = result.specimen.bbox
    lines.append(f"Specimen     : bbox ({x0}, {y0})-({x1}, {y1}), threshold {result.specimen.threshold}")
    lines.append(f"Tumor        : {result.tumor.area} px from {result.tumor_source}")
    clocks = " | ".join(f"{c.value}: {_mm(result.clock.get(c))}" for c in CLOCK_ORDER)
    lines.append(f"Clock margins: {clocks}")
    for clock, reason in result.clock.failures.items():
        lines.append(f"  {clock.value} o'clock absent: {reason}")
    verdict = "POSITIVE MARGIN" if result.positive_margin else "clear"
    lines.append(f"Min margin   : {result.profile.min_margin_mm:.2f} mm "
                 f"(threshold {result.threshold_mm:g} mm) -> {verdict}")
    lines.append(f"Caution pts  : {len(result.caution_points)}")
    for warning in result.warnings:
        lines.append(f"Warning      : {warning}")
    lines.append(f"Duration     : {result.duration_s:.2f} s")
    lines.append("===")
    return "\n".join(lines)


def format_training(history: dict[str, Any], weights_path: str | Path) -> str:
    epochs = history["epochs"]
    lines = [f"=== Training: {len(epochs)} epochs ==="]
    for rec in epochs:
        val = rec["validation_loss"]
        lines.append(f"  epoch {rec['epoch']:3d}  train {rec['train_loss']:.5f}  "
                     f"val {'n/a' if val is None else f'{val:.5f}'}")
    if history["stopped_early"]:
        lines.append(f"Stopped early; best epoch {history['best_epoch']}")
    lines.append(f"Weights      : {weights_path}")
    lines.append("===")
    return "\n".join(lines)
