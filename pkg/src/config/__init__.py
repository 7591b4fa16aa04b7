"""
Configuration loaders.

App config:     reads config.yaml, applies MARGIN_* environment overrides.
Engine config:  reads margin.default.json (plus optional override), validates against JSON Schema.
"""

from config.loader import (
    AppConfig,
    JournalConfig,
    LoggingConfig,
    default_config,
    load_config,
)
from config.margin_config import (
    AugmentationConfig,
    CalibrationConfig,
    InferenceConfig,
    MarginConfig,
    MarginConfigError,
    MarginSettings,
    NetworkConfig,
    PhantomConfig,
    SpecimenConfig,
    TrainingConfig,
    load_margin_config,
)

__all__ = [
    # App config (YAML)
    "AppConfig",
    "default_config",
    "JournalConfig",
    "load_config",
    "LoggingConfig",
    # Engine config (JSON + schema)
    "AugmentationConfig",
    "CalibrationConfig",
    "InferenceConfig",
    "load_margin_config",
    "MarginConfig",
    "MarginConfigError",
    "MarginSettings",
    "NetworkConfig",
    "PhantomConfig",
    "SpecimenConfig",
    "TrainingConfig",
]
