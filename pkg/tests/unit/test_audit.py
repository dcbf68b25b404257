"""Unit tests for src/audit.py."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pytest

from src.audit import AuditLogger, read_events


class TestRecordEvent:
    def test_disabled_logger_writes_nothing(self, tmp_path: Path) -> None:
        path = tmp_path / "runs.jsonl"
        AuditLogger(enabled=False, file_path=path).record_event("run_started")
        assert not path.exists()

    def test_event_shape(self, tmp_path: Path) -> None:
        path = tmp_path / "nested" / "runs.jsonl"
        AuditLogger(enabled=True, file_path=path).record_event("run_started", command="bench")
        (event,) = read_events(path)
        assert event["event_type"] == "run_started"
        assert event["payload"] == {"command": "bench"}
        assert event["run"] == {}
        assert "timestamp" in event

    def test_numpy_payload_is_serialized(self, tmp_path: Path) -> None:
        path = tmp_path / "runs.jsonl"
        AuditLogger(enabled=True, file_path=path).record_event(
            "channel_learned",
            mass=np.float64(0.25),
            counts=np.array([1, 2]),
            offset=(0, 1),
            gap=float("inf"),
            where=Path("results"),
        )
        payload = read_events(path)[0]["payload"]
        assert payload == {
            "mass": 0.25,
            "counts": [1, 2],
            "offset": [0, 1],
            "gap": "inf",
            "where": "results",
        }

    def test_write_failure_is_logged(
        self, tmp_path: Path, caplog: pytest.LogCaptureFixture
    ) -> None:
        blocker = tmp_path / "file"
        blocker.write_text("", encoding="utf-8")
        audit = AuditLogger(enabled=True, file_path=blocker / "runs.jsonl")
        with caplog.at_level(logging.ERROR, logger="src.audit"):
            audit.record_event("run_started")
        assert "Failed to write audit event 'run_started'" in caplog.text


class TestContext:
    def test_bound_fields_reach_later_events(self, tmp_path: Path) -> None:
        path = tmp_path / "runs.jsonl"
        audit = AuditLogger(enabled=True, file_path=path)
        audit.record_event("before")
        audit.bind(command="factory")
        audit.bind(seed=np.int64(7))
        audit.record_event("after")
        before, after = read_events(path)
        assert before["run"] == {}
        assert after["run"] == {"command": "factory", "seed": 7}


# ---------------------------------------------------------------------------
# Rotation and reading back
# ---------------------------------------------------------------------------


class TestRotation:
    def test_oversized_file_is_shifted(self, tmp_path: Path) -> None:
        path = tmp_path / "runs.jsonl"
        audit = AuditLogger(enabled=True, file_path=path, max_bytes=200)
        audit.record_event("first", note="x" * 100)
        audit.record_event("second", note="y" * 100)
        assert [e["event_type"] for e in read_events(tmp_path / "runs.jsonl.1")] == ["first"]
        assert [e["event_type"] for e in read_events(path)] == ["second"]

    def test_oldest_backup_is_dropped(self, tmp_path: Path) -> None:
        path = tmp_path / "runs.jsonl"
        audit = AuditLogger(enabled=True, file_path=path, max_bytes=200, backups=2)
        for name in ("first", "second", "third", "fourth"):
            audit.record_event(name, note="z" * 100)
        assert [e["event_type"] for e in read_events(path)] == ["fourth"]
        assert read_events(tmp_path / "runs.jsonl.1")[0]["event_type"] == "third"
        assert read_events(tmp_path / "runs.jsonl.2")[0]["event_type"] == "second"
        assert not (tmp_path / "runs.jsonl.3").exists()


class TestReadEvents:
    def test_missing_file_is_empty(self, tmp_path: Path) -> None:
        assert read_events(tmp_path / "absent.jsonl") == []

    def test_filter_by_type(self, tmp_path: Path) -> None:
        path = tmp_path / "runs.jsonl"
        audit = AuditLogger(enabled=True, file_path=path)
        for name in ("run_started", "report_emitted", "run_started"):
            audit.record_event(name)
        assert len(read_events(path, "run_started")) == 2
