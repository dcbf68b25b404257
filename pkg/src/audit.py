"""JSONL provenance log for simulation runs.

Each line is one event: ``timestamp``, ``event_type``, the ``run`` context
bound so far (command, config hash, seed) and the event ``payload``.
"""

from __future__ import annotations

import json
import logging
import math
from datetime import UTC, datetime
from pathlib import Path
from threading import Lock
from typing import Any

import numpy as np

from src.config import config

logger = logging.getLogger(__name__)

__all__ = ["AuditLogger", "audit_logger", "read_events"]


def _json_safe(value: Any) -> Any:
    if isinstance(value, np.generic | np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if value is None or isinstance(value, bool | int | float | str):
        return value
    if isinstance(value, dict):
        return {str(key): _json_safe(inner) for key, inner in value.items()}
    if isinstance(value, list | tuple | set | frozenset):
        return [_json_safe(item) for item in value]
    return str(value)


class AuditLogger:
    """Append run events (start, synthesis, learning, emission) to a JSONL file.

    Files past ``max_bytes`` shift to ``.1`` ... ``.backups``; the oldest is dropped.
    Write failures are logged and never interrupt a run.
    """

    def __init__(
        self,
        *,
        enabled: bool,
        file_path: str | Path,
        max_bytes: int = 10 * 1024 * 1024,
        backups: int = 3,
    ) -> None:
        self.enabled = enabled
        self.file_path = Path(file_path)
        self.max_bytes = max_bytes
        self.backups = max(1, backups)
        self.context: dict[str, Any] = {}
        self._lock = Lock()

    def bind(self, **fields: Any) -> None:
        """Attach fields to every later event of this run."""

        self.context = {**self.context, **_json_safe(fields)}

    def _backup(self, index: int) -> Path:
        return self.file_path.with_suffix(f"{self.file_path.suffix}.{index}")

    def _rotate(self, incoming: int) -> None:
        if not self.file_path.exists():
            return
        if self.file_path.stat().st_size + incoming <= self.max_bytes:
            return
        self._backup(self.backups).unlink(missing_ok=True)
        for index in range(self.backups - 1, 0, -1):
            if self._backup(index).exists():
                self._backup(index).replace(self._backup(index + 1))
        self.file_path.replace(self._backup(1))

    def record_event(self, event_type: str, **payload: Any) -> None:
        if not self.enabled:
            return

        line = json.dumps(
            {
                "timestamp": datetime.now(UTC).isoformat(),
                "event_type": event_type,
                "run": self.context,
                "payload": _json_safe(payload),
            },
            ensure_ascii=False,
            sort_keys=True,
        )
        try:
            with self._lock:
                self.file_path.parent.mkdir(parents=True, exist_ok=True)
                self._rotate(len(line.encode("utf-8")) + 1)
                with self.file_path.open("a", encoding="utf-8") as handle:
                    handle.write(line + "\n")
        except OSError as exc:
            logger.error(
                "Failed to write audit event '%s' to %s: %s", event_type, self.file_path, exc
            )


def read_events(path: str | Path, event_type: str | None = None) -> list[dict[str, Any]]:
    """Events of one log file in write order, optionally of a single type."""

    path = Path(path)
    if not path.exists():
        return []
    events = [
        json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()
    ]
    if event_type is None:
        return events
    return [event for event in events if event["event_type"] == event_type]


audit_logger = AuditLogger(
    enabled=config.enable_audit_log,
    file_path=config.audit_log_path,
    max_bytes=config.audit_log_max_bytes,
)
