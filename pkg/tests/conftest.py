"""
Shared pytest fixtures and configuration.

This conftest is the root conftest for all test suites. Every test writes its
audit events to a temporary file so runs never touch ``logs/``.
"""

from __future__ import annotations

from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest

from src.audit import audit_logger
from src.circuit.detectors import DetectorModel
from src.codes.color import color_code
from src.codes.css import CssCode

_MSD_VARIABLES = (
    "MSD_WORKERS",
    "MSD_LOG_LEVEL",
    "MSD_ENABLE_AUDIT_LOG",
    "MSD_AUDIT_LOG_PATH",
    "MSD_AUDIT_LOG_MAX_BYTES",
    "MSD_DENSE_MAX_QUBITS",
    "MSD_MLD_MAX_DETECTORS",
    "MSD_POSTERIOR_SAMPLES",
    "MSD_NOISE_RESCALE",
)


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--run-slow", action="store_true", default=False, help="also run tests marked slow"
    )


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: long-running Monte Carlo test, opt-in")
    config.addinivalue_line("markers", "integration: runs a full pipeline end to end")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------


@pytest.fixture()
def fake_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Ignore any local .env file and clear every MSD_* override."""
    monkeypatch.setattr("src.config.load_dotenv", lambda *args, **kwargs: None)
    for name in _MSD_VARIABLES:
        monkeypatch.delenv(name, raising=False)


@pytest.fixture(autouse=True)
def isolated_audit_log(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> Generator[Path, None, None]:
    path = tmp_path / "audit" / "runs.jsonl"
    monkeypatch.setattr(audit_logger, "file_path", path)
    monkeypatch.setattr(audit_logger, "enabled", True)
    monkeypatch.setattr(audit_logger, "context", {})
    yield path


# ---------------------------------------------------------------------------
# Codes and models
# ---------------------------------------------------------------------------


@pytest.fixture()
def steane() -> CssCode:
    return color_code(3)


@pytest.fixture()
def bare() -> CssCode:
    return color_code(1)


@pytest.fixture()
def chain_model() -> DetectorModel:
    """Three mechanisms on a two-detector chain; only the first flips the logical.

    ``m0`` flips D0, ``m1`` flips D0 and D1, ``m2`` flips D1.
    """
    return DetectorModel.from_dense(
        np.array([[1, 1, 0], [0, 1, 1]]),
        np.array([[1, 0, 0]]),
        [0.1, 0.2, 0.1],
        detector_labels=["block1:Z0", "block0:Z0"],
        observable_labels=["block0:LZ"],
    )
