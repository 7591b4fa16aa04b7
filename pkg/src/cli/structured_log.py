"""
Structured JSON event logger.

Emits one JSON object per line to stderr so batch runs can be parsed by a
log aggregator. Optional webhook: when configured, alert events
(positive_margin, error) are POSTed to the URL.
"""

from __future__ import annotations

import json
import logging
import sys
import urllib.request
import uuid
from datetime import datetime, timezone
from typing import Any

logger = logging.getLogger("margin.events")

ALERT_EVENTS = frozenset({"positive_margin", "error"})


class StructuredEventLogger:
    """Emit structured JSON events to stderr and optional webhook."""

    def __init__(
        self,
        command: str,
        *,
        enabled: bool = True,
        webhook_url: str = "",
        stream: Any = None,
        run_id: str | None = None,
    ) -> None:
        self._command = command
        self._enabled = enabled
        self._webhook_url = webhook_url.strip()
        self._stream = stream or sys.stderr
        self.run_id = run_id or uuid.uuid4().hex[:12]

    def _emit(self, event_type: str, **fields: Any) -> dict:
        record = {"ts": datetime.now(timezone.utc).isoformat(), "event": event_type,
                  "run_id": self.run_id, "command": self._command, **fields}
        # Paths and enums in event fields are written as strings.
        line = json.dumps(record, default=str)
        if self._enabled:
            print(line, file=self._stream, flush=True)
        if self._webhook_url and event_type in ALERT_EVENTS:
            self._notify(line)
        return record

    def _notify(self, body: str) -> None:
        """POST one alert; failures are logged and never abort the run."""
        request = urllib.request.Request(
            self._webhook_url,
            data=body.encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=5):
                pass
        except Exception as exc:
            logger.warning("alert webhook failed for run %s: %s", self.run_id, exc)

    def run_start(self, **params: Any) -> dict:
        return self._emit("run_start", **params)

    def stage_complete(self, stage: str, duration_ms: float) -> dict:
        return self._emit("stage_complete", stage=stage, duration_ms=round(duration_ms, 3))

    def positive_margin(self, min_margin_mm: float, threshold_mm: float, caution_points: int) -> dict:
        return self._emit(
            "positive_margin",
            min_margin_mm=min_margin_mm,
            threshold_mm=threshold_mm,
            caution_points=caution_points,
        )

    def epoch_complete(self, epoch: int, train_loss: float, validation_loss: float | None) -> dict:
        return self._emit(
            "epoch_complete",
            epoch=epoch,
            train_loss=train_loss,
            validation_loss=validation_loss,
        )

    def run_complete(self, exit_code: int, duration_s: float) -> dict:
        return self._emit("run_complete", exit_code=exit_code, duration_s=round(duration_s, 3))

    def error(self, message: str, detail: str = "") -> dict:
        return self._emit("error", message=message, detail=detail)
