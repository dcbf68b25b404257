"""Central configuration utilities for magic-factory-sim."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

__all__ = ["VERSION", "FactoryConfig", "config", "load_config"]

#: Human-readable application version, kept in sync with pyproject.toml
VERSION: str = "0.3.0"


def _load_dotenv(dotenv_path: Path | None) -> None:
    """Load environment variables without overriding existing process values."""

    if dotenv_path is None:
        load_dotenv(override=False)
    else:
        load_dotenv(dotenv_path=dotenv_path, override=False)


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise ValueError(f"Environment variable {name} must be an integer") from exc


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None:
        return default
    try:
        return float(value)
    except ValueError as exc:
        raise ValueError(f"Environment variable {name} must be a number") from exc


def _env_bool(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    truthy = {"1", "true", "t", "yes", "y", "on"}
    falsy = {"0", "false", "f", "no", "n", "off"}
    normalized = value.strip().lower()
    if normalized in truthy:
        return True
    if normalized in falsy:
        return False
    raise ValueError(
        f"Environment variable {name} must be boolean-like (one of {sorted(truthy | falsy)})"
    )


@dataclass
class FactoryConfig:
    """Process-level settings with environment overrides and validation.

    Experiment parameters (distance, noise, shots, seed) are not stored here;
    they live in ``src.harness.experiment.ExperimentConfig``.
    """

    # Parallelism
    workers: int = field(default_factory=lambda: _env_int("MSD_WORKERS", 1))

    # Logging Configuration
    log_level: str = field(default_factory=lambda: os.getenv("MSD_LOG_LEVEL", "INFO").upper())
    enable_audit_log: bool = field(default_factory=lambda: _env_bool("MSD_ENABLE_AUDIT_LOG", True))
    audit_log_path: str = field(
        default_factory=lambda: os.getenv("MSD_AUDIT_LOG_PATH", "logs/runs.jsonl")
    )
    audit_log_max_bytes: int = field(
        default_factory=lambda: _env_int("MSD_AUDIT_LOG_MAX_BYTES", 10 * 1024 * 1024)
    )

    # Simulator limits
    dense_max_qubits: int = field(default_factory=lambda: _env_int("MSD_DENSE_MAX_QUBITS", 12))
    mld_max_detectors: int = field(default_factory=lambda: _env_int("MSD_MLD_MAX_DETECTORS", 24))

    # Monte Carlo defaults
    posterior_samples: int = field(
        default_factory=lambda: _env_int("MSD_POSTERIOR_SAMPLES", 100_000)
    )
    noise_rescale: float = field(default_factory=lambda: _env_float("MSD_NOISE_RESCALE", 1.0))

    # Miscellaneous
    config_source: str = field(default="environment", init=False)

    def validate(self) -> bool:
        """Validate configuration settings."""

        if self.workers <= 0:
            raise ValueError("MSD_WORKERS must be greater than 0")

        if self.log_level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError("MSD_LOG_LEVEL must be a standard logging level name")

        if self.enable_audit_log and not self.audit_log_path.strip():
            raise ValueError("MSD_AUDIT_LOG_PATH must be set when audit logging is enabled")

        if self.audit_log_max_bytes <= 0:
            raise ValueError("MSD_AUDIT_LOG_MAX_BYTES must be greater than 0")

        if not 1 <= self.dense_max_qubits <= 16:
            raise ValueError("MSD_DENSE_MAX_QUBITS must be between 1 and 16")

        if not 1 <= self.mld_max_detectors <= 30:
            raise ValueError("MSD_MLD_MAX_DETECTORS must be between 1 and 30")

        if self.posterior_samples <= 0:
            raise ValueError("MSD_POSTERIOR_SAMPLES must be greater than 0")

        if self.noise_rescale <= 0:
            raise ValueError("MSD_NOISE_RESCALE must be greater than 0")

        return True

    def safe_view(self) -> dict[str, Any]:
        """Return the configuration as a plain dictionary for logging and provenance."""

        return asdict(self)


def load_config(dotenv_path: os.PathLike[str] | None = None) -> FactoryConfig:
    """Load configuration from the environment, optionally pointing to a specific .env file."""

    path = Path(dotenv_path) if dotenv_path is not None else None
    _load_dotenv(path)
    config_obj = FactoryConfig()
    if path is not None:
        config_obj.config_source = str(path)
    return config_obj


# Global configuration instance loaded from the default environment
config = load_config()
