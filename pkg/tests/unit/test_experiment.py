"""Unit tests for src/harness/experiment.py."""

from __future__ import annotations

import math
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.exceptions import ConfigurationError
from src.harness.experiment import ExperimentConfig, load_experiment


class TestExperimentDefaults:
    def test_seed_is_required(self) -> None:
        with pytest.raises(ConfigurationError, match="seed"):
            ExperimentConfig.from_mapping({})

    def test_defaults(self) -> None:
        cfg = ExperimentConfig(seed=1)
        assert cfg.distance == 3
        assert cfg.decoder == "mle"
        assert cfg.shots_per_basis == 100_000
        assert cfg.probe_angles[1] == pytest.approx(0.16 * math.pi)
        assert cfg.out == Path("results")

    def test_config_is_frozen(self) -> None:
        cfg = ExperimentConfig(seed=1)
        with pytest.raises(ValidationError):
            cfg.seed = 2  # type: ignore[misc]

    def test_unknown_field_rejected(self) -> None:
        with pytest.raises(ConfigurationError, match="extra"):
            ExperimentConfig.from_mapping({"seed": 1, "colour": "red"})


class TestExperimentValidation:
    @pytest.mark.parametrize(
        ("field", "value", "message"),
        [
            ("distance", 7, "distance must be one of"),
            ("rescale", 0.0, "rescale must be greater than 0"),
            ("shots", 2, "cover all 3 bases"),
            ("shots", 301, "split evenly"),
            ("table_shots", 0, "greater than 0"),
            ("rescale_grid", (0.5, -1.0), "rescale grid"),
            ("noise_overrides", {"p_leak": 0.1}, "Unknown noise parameters"),
            ("decoder", "bp", "decoder"),
        ],
    )
    def test_invalid_values(self, field: str, value: object, message: str) -> None:
        with pytest.raises(ConfigurationError, match=message):
            ExperimentConfig.from_mapping({"seed": 1, field: value})

    def test_rescale_grid_is_sorted(self) -> None:
        cfg = ExperimentConfig(seed=1, rescale_grid=(1.0, 0.5, 0.8))
        assert cfg.rescale_grid == (0.5, 0.8, 1.0)


class TestNoiseModel:
    def test_preset_overrides_then_rescale(self) -> None:
        cfg = ExperimentConfig(
            seed=1, noise_preset="matched", rescale=2.0, noise_overrides={"p_cz": 0.01}
        )
        noise = cfg.noise_model(0.5)
        assert noise.p_cz == 0.01
        assert noise.rescale == pytest.approx(1.25)

    def test_noiseless_preset(self) -> None:
        assert ExperimentConfig(seed=1, noise_preset="noiseless").noise_model().is_noiseless()


class TestConfigHash:
    def test_hash_ignores_output_location(self) -> None:
        first = ExperimentConfig(seed=3, out=Path("a"), format="json")
        second = ExperimentConfig(seed=3, out=Path("b"), format="csv")
        assert first.config_hash() == second.config_hash()
        assert len(first.config_hash()) == 64

    def test_hash_tracks_settings(self) -> None:
        assert ExperimentConfig(seed=3).config_hash() != ExperimentConfig(seed=4).config_hash()

    def test_resolved_is_json_ready(self) -> None:
        resolved = ExperimentConfig(seed=3).resolved()
        assert resolved["out"] == "results"
        assert isinstance(resolved["angles"], list)


class TestOverrides:
    def test_none_values_are_ignored(self) -> None:
        cfg = ExperimentConfig(seed=1).with_overrides(distance=None, shots=30)
        assert cfg.distance == 3
        assert cfg.shots == 30

    def test_invalid_override_raises(self) -> None:
        with pytest.raises(ConfigurationError):
            ExperimentConfig(seed=1).with_overrides(distance=4)


class TestYaml:
    def test_load_with_cli_overrides(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text("distance: 5\nshots: 900\nseed: 11\ndecoder: mld\n", encoding="utf-8")
        cfg = load_experiment(path, shots=300, seed=None)
        assert (cfg.distance, cfg.shots, cfg.seed, cfg.decoder) == (5, 300, 11, "mld")

    def test_empty_file_needs_seed(self, tmp_path: Path) -> None:
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert load_experiment(path, seed=2).seed == 2

    def test_non_mapping_rejected(self, tmp_path: Path) -> None:
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="must be a mapping"):
            load_experiment(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigurationError, match="Cannot read"):
            load_experiment(tmp_path / "absent.yaml")

    def test_without_file(self) -> None:
        assert load_experiment(None, seed=5).seed == 5
