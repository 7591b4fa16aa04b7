"""
Run journal: append-only JSON lines, one per evaluation, training run or metrics call.
"""

import json
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np


def _serialize(obj: Any) -> Any:
    """Reduce reports and histories to plain JSON values."""
    match obj:
        case Enum():
            return obj.value
        case datetime():
            return obj.isoformat()
        case Path():
            return str(obj)
        case np.generic():
            return obj.item()
        case np.ndarray():
            return obj.tolist()
        case dict():
            return {str(_serialize(k)): _serialize(v) for k, v in obj.items()}
        case list() | tuple():
            return [_serialize(x) for x in obj]
    if hasattr(obj, "__dict__") and not isinstance(obj, type):
        return {k: _serialize(v) for k, v in vars(obj).items() if not k.startswith("_")}
    return obj


class RunJournal:
    """Append-only journal. Every record carries ``ts_utc`` and ``event``."""

    def __init__(self, path: str | Path, *, echo_stdout: bool = False) -> None:
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._echo = echo_stdout

    @property
    def path(self) -> Path:
        return self._path

    def _append(self, event: str, payload: dict[str, Any]) -> dict:
        record = _serialize({"ts_utc": datetime.now(timezone.utc).isoformat(), "event": event, **payload})
        line = json.dumps(record)
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
        if self._echo:
            print(line)
        return record

    def evaluation(self, source: str, report: dict, exit_code: int, **extra: Any) -> dict:
        return self._append("evaluation", {"source": source, "exit_code": exit_code, "report": report, **extra})

    def training_run(self, data_dir: str, weights_path: str, seed: int, history: dict, **extra: Any) -> dict:
        return self._append(
            "training_run",
            {"data_dir": data_dir, "weights_path": weights_path, "seed": seed, "history": history, **extra},
        )

    def metrics(self, cases: list[dict], summary: dict | None = None, **extra: Any) -> dict:
        return self._append("metrics", {"cases": cases, "summary": summary, **extra})
