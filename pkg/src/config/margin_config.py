"""
Engine config loader: JSON file -> frozen dataclass tree, validated against JSON Schema.

Default values:      docs/config/margin.default.json
Schema:              docs/config/margin_config.schema.json

A partial override file (same structure, only the keys to change) can be
deep-merged on top of the base config before schema validation.

Usage:
    from config.margin_config import load_margin_config
    cfg = load_margin_config()                              # defaults
    cfg = load_margin_config(override_path="site.json")     # defaults + overrides
    cfg.margin.threshold_mm  # -> 10.0
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from margin_core.contracts import ImageDirection
from margin_core.pipeline import EvaluationParams
from phantom.generator import PhantomRanges
from segnet.augment import AugmentationSpec
from segnet.network import NetworkSpec
from segnet.trainer import TrainConfig

logger = logging.getLogger("margin.config")

# ---------------------------------------------------------------------------
# Project root detection (walk up from this file to find pyproject.toml)
# ---------------------------------------------------------------------------


def _find_project_root() -> Path:
    """Walk up from this file looking for pyproject.toml; fall back to CWD when installed."""
    candidate = Path(__file__).resolve().parent
    for _ in range(10):
        if (candidate / "pyproject.toml").exists():
            return candidate
        parent = candidate.parent
        if parent == candidate:
            break
        candidate = parent
    return Path.cwd()


_PROJECT_ROOT = _find_project_root()

DEFAULT_CONFIG_PATH = _PROJECT_ROOT / "docs" / "config" / "margin.default.json"
DEFAULT_SCHEMA_PATH = _PROJECT_ROOT / "docs" / "config" / "margin_config.schema.json"
DEFAULT_REPORT_SCHEMA_PATH = _PROJECT_ROOT / "docs" / "config" / "report.schema.json"


# ---------------------------------------------------------------------------
# Frozen dataclass tree (mirrors margin.default.json)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationConfig:
    coin_diameter_mm: float
    min_area_px: int
    min_circularity: float


@dataclass(frozen=True)
class SpecimenConfig:
    connectivity: int
    smooth_radius: int
    padding: int


@dataclass(frozen=True)
class MarginSettings:
    threshold_mm: float
    twelve_oclock: str   # "up" | "right" | "down" | "left"


@dataclass(frozen=True)
class NetworkConfig:
    input_size: int
    widths: tuple[int, ...]
    num_classes: int


@dataclass(frozen=True)
class TrainingConfig:
    batch_size: int
    learning_rate: float
    beta1: float
    beta2: float
    eps: float
    epochs: int
    patience: int
    seed: int
    validation_fraction: float
    dtype: str   # "float64" | "float32"


@dataclass(frozen=True)
class AugmentationConfig:
    count: int
    flip_horizontal: bool
    flip_vertical: bool
    rotation_deg: float
    zoom_min: float
    zoom_max: float
    elastic_amplitude_px: float
    elastic_sigma_px: float


@dataclass(frozen=True)
class InferenceConfig:
    erosion_radius: int = 1


@dataclass(frozen=True)
class PhantomConfig:
    frame: int = 320
    coin_radius_min_px: float = 22.0
    coin_radius_max_px: float = 30.0
    cavity_probability: float = 0.3
    noise_sigma_max: float = 3.0
    markers: bool = True


@dataclass(frozen=True)
class MarginConfig:
    """Top-level engine configuration. Every algorithm parameter lives here."""
    version: str
    calibration: CalibrationConfig
    specimen: SpecimenConfig
    margin: MarginSettings
    network: NetworkConfig
    training: TrainingConfig
    augmentation: AugmentationConfig
    inference: InferenceConfig = InferenceConfig()
    phantom: PhantomConfig = PhantomConfig()

    def evaluation_params(self, threshold_mm: float | None = None) -> EvaluationParams:
        return EvaluationParams(
            smooth_radius=self.specimen.smooth_radius,
            padding=self.specimen.padding,
            connectivity=self.specimen.connectivity,
            coin_diameter_mm=self.calibration.coin_diameter_mm,
            min_area_px=self.calibration.min_area_px,
            min_circularity=self.calibration.min_circularity,
            threshold_mm=self.margin.threshold_mm if threshold_mm is None else threshold_mm,
            twelve_oclock=ImageDirection(self.margin.twelve_oclock),
        )

    def network_spec(self) -> NetworkSpec:
        return NetworkSpec(
            widths=self.network.widths,
            num_classes=self.network.num_classes,
            input_size=self.network.input_size,
        )

    def train_config(self, *, seed: int | None = None, epochs: int | None = None) -> TrainConfig:
        t = self.training
        return TrainConfig(
            batch_size=t.batch_size,
            learning_rate=t.learning_rate,
            beta1=t.beta1,
            beta2=t.beta2,
            eps=t.eps,
            epochs=t.epochs if epochs is None else epochs,
            patience=t.patience,
            seed=t.seed if seed is None else seed,
            dtype=t.dtype,
        )

    def augmentation_spec(self) -> AugmentationSpec:
        a = self.augmentation
        return AugmentationSpec(
            count=a.count,
            flip_horizontal=a.flip_horizontal,
            flip_vertical=a.flip_vertical,
            rotation_deg=a.rotation_deg,
            zoom_range=(a.zoom_min, a.zoom_max),
            elastic_amplitude_px=a.elastic_amplitude_px,
            elastic_sigma_px=a.elastic_sigma_px,
        )

    def phantom_ranges(self) -> PhantomRanges:
        p = self.phantom
        return PhantomRanges(
            frame=p.frame,
            coin_radius_px=(p.coin_radius_min_px, p.coin_radius_max_px),
            cavity_probability=p.cavity_probability,
            noise_sigma=(0.0, p.noise_sigma_max),
            markers=p.markers,
        )


# ---------------------------------------------------------------------------
# Deep merge for partial overrides
# ---------------------------------------------------------------------------


def _deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge *overrides* into a copy of *base*.

    - Dict values are merged recursively (override keys win).
    - Non-dict values in overrides replace the base value.
    - Keys in base that are absent from overrides are preserved.
    """
    merged = dict(base)
    for key, val in overrides.items():
        if key in merged and isinstance(merged[key], dict) and isinstance(val, dict):
            merged[key] = _deep_merge(merged[key], val)
        else:
            merged[key] = val
    return merged


# ---------------------------------------------------------------------------
# Loader
# ---------------------------------------------------------------------------


class MarginConfigError(Exception):
    """Raised when engine config loading or validation fails."""


def _read_json(path: Path, what: str) -> Any:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise MarginConfigError(f"{what} is not valid JSON: {exc}") from exc


def validate_against(data: Any, schema_path: Path, what: str) -> None:
    """Validate *data* against the JSON Schema at *schema_path*."""
    if not schema_path.exists():
        raise MarginConfigError(f"Schema file not found: {schema_path}")
    schema = _read_json(schema_path, f"schema {schema_path.name}")
    try:
        jsonschema.validate(instance=data, schema=schema)
    except jsonschema.ValidationError as exc:
        raise MarginConfigError(f"{what} validation failed: {exc.message}") from exc


def _build_config(data: dict[str, Any]) -> MarginConfig:
    """Convert a raw dict (already validated) into the frozen dataclass tree."""
    cal, spc, mar = data["calibration"], data["specimen"], data["margin"]
    net, trn, aug = data["network"], data["training"], data["augmentation"]
    inf, ph = data.get("inference", {}), data.get("phantom", {})

    return MarginConfig(
        version=data["version"],
        calibration=CalibrationConfig(
            coin_diameter_mm=float(cal["coin_diameter_mm"]),
            min_area_px=int(cal["min_area_px"]),
            min_circularity=float(cal["min_circularity"]),
        ),
        specimen=SpecimenConfig(
            connectivity=int(spc["connectivity"]),
            smooth_radius=int(spc["smooth_radius"]),
            padding=int(spc["padding"]),
        ),
        margin=MarginSettings(
            threshold_mm=float(mar["threshold_mm"]),
            twelve_oclock=mar.get("twelve_oclock", "up"),
        ),
        network=NetworkConfig(
            input_size=int(net["input_size"]),
            widths=tuple(int(w) for w in net["widths"]),
            num_classes=int(net.get("num_classes", 2)),
        ),
        training=TrainingConfig(
            batch_size=int(trn["batch_size"]),
            learning_rate=float(trn["learning_rate"]),
            beta1=float(trn.get("beta1", 0.9)),
            beta2=float(trn.get("beta2", 0.999)),
            eps=float(trn.get("eps", 1e-8)),
            epochs=int(trn["epochs"]),
            patience=int(trn["patience"]),
            seed=int(trn.get("seed", 0)),
            validation_fraction=float(trn.get("validation_fraction", 0.2)),
            dtype=trn.get("dtype", "float64"),
        ),
        augmentation=AugmentationConfig(
            count=int(aug["count"]),
            flip_horizontal=bool(aug.get("flip_horizontal", True)),
            flip_vertical=bool(aug.get("flip_vertical", True)),
            rotation_deg=float(aug["rotation_deg"]),
            zoom_min=float(aug["zoom"][0]),
            zoom_max=float(aug["zoom"][1]),
            elastic_amplitude_px=float(aug["elastic_amplitude_px"]),
            elastic_sigma_px=float(aug["elastic_sigma_px"]),
        ),
        inference=InferenceConfig(erosion_radius=int(inf.get("erosion_radius", 1))),
        phantom=PhantomConfig(
            frame=int(ph.get("frame", 320)),
            coin_radius_min_px=float(ph.get("coin_radius_px", [22.0, 30.0])[0]),
            coin_radius_max_px=float(ph.get("coin_radius_px", [22.0, 30.0])[1]),
            cavity_probability=float(ph.get("cavity_probability", 0.3)),
            noise_sigma_max=float(ph.get("noise_sigma_max", 3.0)),
            markers=bool(ph.get("markers", True)),
        ),
    )


def load_margin_config(
    config_path: str | Path | None = None,
    schema_path: str | Path | None = None,
    override_path: str | Path | None = None,
) -> MarginConfig:
    """Load and validate the engine configuration.

    Parameters
    ----------
    config_path:
        Path to an engine JSON config.  Defaults to ``docs/config/margin.default.json``.
    schema_path:
        Path to the JSON Schema file.  Defaults to ``docs/config/margin_config.schema.json``.
    override_path:
        Optional partial JSON file deep-merged on top of the base config
        before validation.

    Returns
    -------
    MarginConfig
        Frozen dataclass tree with all engine parameters.

    Raises
    ------
    MarginConfigError
        If a file is missing, unparseable, or fails schema validation.
    """
    cfg_path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
    sch_path = Path(schema_path) if schema_path else DEFAULT_SCHEMA_PATH

    if not cfg_path.exists():
        raise MarginConfigError(f"Engine config file not found: {cfg_path}")
    data = _read_json(cfg_path, "Engine config")

    if override_path:
        ov_path = Path(override_path)
        if not ov_path.exists():
            raise MarginConfigError(f"Override config file not found: {ov_path}")
        overrides = _read_json(ov_path, f"Override config {ov_path.name}")
        if not isinstance(overrides, dict):
            raise MarginConfigError(f"Override config {ov_path.name} must be a JSON object")
        data = _deep_merge(data, overrides)
        logger.info("Loaded engine config override: %s", ov_path.name)

    validate_against(data, sch_path, "Engine config")

    return _build_config(data)
