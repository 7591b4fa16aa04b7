"""
Config loader: YAML file -> frozen dataclass tree.

Environment overrides (``.env`` is loaded by the CLI): MARGIN_MODEL_PATH
replaces ``model_path``, MARGIN_LOG_LEVEL replaces ``logging.level``.
"""

import os
from dataclasses import dataclass
from pathlib import Path

import yaml

ENV_MODEL_PATH = "MARGIN_MODEL_PATH"
ENV_LOG_LEVEL = "MARGIN_LOG_LEVEL"


@dataclass(frozen=True)
class JournalConfig:
    path: str = "out/journal.jsonl"
    echo_stdout: bool = False


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"
    structured_events: bool = True
    webhook_url: str = ""


@dataclass(frozen=True)
class AppConfig:
    model_path: str = "models/segnet.msg1"
    output_dir: str = "out"
    engine_override: str = ""
    journal: JournalConfig = JournalConfig()
    logging: LoggingConfig = LoggingConfig()


def default_config() -> AppConfig:
    """Defaults with environment overrides applied (used when no config.yaml exists)."""
    return _apply_env(AppConfig())


def _apply_env(cfg: AppConfig) -> AppConfig:
    model_path = os.environ.get(ENV_MODEL_PATH) or cfg.model_path
    level = os.environ.get(ENV_LOG_LEVEL) or cfg.logging.level
    return AppConfig(
        model_path=model_path,
        output_dir=cfg.output_dir,
        engine_override=cfg.engine_override,
        journal=cfg.journal,
        logging=LoggingConfig(
            level=level.upper(),
            structured_events=cfg.logging.structured_events,
            webhook_url=cfg.logging.webhook_url,
        ),
    )


def load_config(path: str | Path = "config.yaml") -> AppConfig:
    """
    Load configuration from a YAML file.

    Raises
    ------
    FileNotFoundError
        The file does not exist.
    ValueError
        The file is not a YAML mapping.
    """
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    with open(config_path) as f:
        raw = yaml.safe_load(f)

    if not isinstance(raw, dict):
        raise ValueError(f"Config file must be a YAML mapping, got {type(raw).__name__}")

    j_raw = raw.get("journal", {}) or {}
    j_cfg = JournalConfig(
        path=str(j_raw.get("path", "out/journal.jsonl")),
        echo_stdout=bool(j_raw.get("echo_stdout", False)),
    )

    l_raw = raw.get("logging", {}) or {}
    l_cfg = LoggingConfig(
        level=str(l_raw.get("level", "INFO")),
        structured_events=bool(l_raw.get("structured_events", True)),
        webhook_url=str(l_raw.get("webhook_url", "") or ""),
    )

    return _apply_env(
        AppConfig(
            model_path=str(raw.get("model_path", "models/segnet.msg1")),
            output_dir=str(raw.get("output_dir", "out")),
            engine_override=str(raw.get("engine_override", "") or ""),
            journal=j_cfg,
            logging=l_cfg,
        )
    )
