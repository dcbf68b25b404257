"""Experiment configuration: validated, hashable, loadable from YAML."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.circuit.noise import NoiseModel
from src.codes.color import SUPPORTED_DISTANCES
from src.config import config
from src.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

__all__ = ["ExperimentConfig", "load_experiment"]

_BASIS_COUNT = 3


class ExperimentConfig(BaseModel):
    """Everything a run depends on besides process-level settings.

    Angles are in radians; ``shots`` is the total over the three bases.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    distance: int = 3
    noise_preset: Literal["baseline", "matched", "noiseless"] = "baseline"
    rescale: float = Field(default_factory=lambda: config.noise_rescale)
    noise_overrides: dict[str, float] = Field(default_factory=dict)
    angles: tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0)
    shots: int = 300_000
    decoder: Literal["mle", "mld"] = "mle"
    thresholds: tuple[float, ...] | None = None
    table_shots: int = 10_000_000
    posterior_samples: int = Field(default_factory=lambda: config.posterior_samples)
    source: Literal["published", "search"] = "published"
    phase_points: int = 16
    probe_angles: tuple[float, ...] = tuple(math.pi * t for t in (0.0, 0.16, 0.24, 0.32))
    rescale_grid: tuple[float, ...] = (0.4, 0.6, 0.8, 1.0, 1.25)
    seed: int
    out: Path = Path("results")
    format: Literal["json", "csv"] = "json"

    @field_validator("distance")
    @classmethod
    def validate_distance(cls, v: int) -> int:
        if v not in SUPPORTED_DISTANCES:
            raise ValueError(f"distance must be one of {SUPPORTED_DISTANCES}, got {v}")
        return v

    @field_validator("rescale")
    @classmethod
    def validate_rescale(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("rescale must be greater than 0")
        return v

    @field_validator("shots")
    @classmethod
    def validate_shots(cls, v: int) -> int:
        if v < _BASIS_COUNT:
            raise ValueError(f"shots must cover all {_BASIS_COUNT} bases, got {v}")
        if v % _BASIS_COUNT:
            raise ValueError(f"shots must split evenly across {_BASIS_COUNT} bases, got {v}")
        return v

    @field_validator("table_shots", "posterior_samples", "phase_points")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("value must be greater than 0")
        return v

    @field_validator("rescale_grid")
    @classmethod
    def validate_grid(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(r <= 0 for r in v):
            raise ValueError("rescale grid values must be greater than 0")
        return tuple(sorted(v))

    @field_validator("noise_overrides")
    @classmethod
    def validate_overrides(cls, v: dict[str, float]) -> dict[str, float]:
        unknown = set(v) - set(NoiseModel.model_fields)
        if unknown:
            raise ValueError(f"Unknown noise parameters: {sorted(unknown)}")
        return v

    @property
    def shots_per_basis(self) -> int:
        return self.shots // _BASIS_COUNT

    def noise_model(self, factor: float = 1.0) -> NoiseModel:
        """Preset, then overrides, then ``rescale * factor``."""

        base = NoiseModel.preset(self.noise_preset)
        fields = {**base.model_dump(), **self.noise_overrides}
        fields["rescale"] = fields["rescale"] * self.rescale * factor
        return NoiseModel(**fields)

    def resolved(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    def config_hash(self) -> str:
        """sha256 of the resolved configuration, output location excluded."""

        echo = {k: v for k, v in self.resolved().items() if k not in {"out", "format"}}
        text = json.dumps(echo, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        """Copy with every non-``None`` override applied and validated."""

        updates = {key: value for key, value in overrides.items() if value is not None}
        try:
            return ExperimentConfig(**{**self.model_dump(), **updates})
        except ValidationError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def from_mapping(cls, data: dict[str, Any], **overrides: Any) -> ExperimentConfig:
        fields = {**data, **{k: v for k, v in overrides.items() if v is not None}}
        try:
            return cls(**fields)
        except ValidationError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def from_yaml(cls, path: Path, **overrides: Any) -> ExperimentConfig:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"Cannot read experiment config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"Experiment config {path} must be a mapping")
        logger.debug("Loaded experiment config from %s", path)
        return cls.from_mapping(data, **overrides)


def load_experiment(path: Path | None, **overrides: Any) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig.from_mapping({}, **overrides)
    return ExperimentConfig.from_yaml(path, **overrides)
