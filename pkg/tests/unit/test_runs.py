"""Unit tests for src/harness/runs.py."""

from __future__ import annotations

import math
from pathlib import Path

import pytest

from src.audit import read_events
from src.harness.experiment import ExperimentConfig
from src.harness.report import RescalePoint
from src.harness.runs import (
    CrossCheck,
    _crossing,
    bench,
    coherent_probe,
    default_thresholds,
    phase_sweep,
    rescale_study,
    run_factory,
    run_injection,
    suppression_slope,
)


def _config(**fields: object) -> ExperimentConfig:
    base: dict[str, object] = {
        "distance": 1,
        "shots": 600,
        "seed": 3,
        "posterior_samples": 4_000,
        "phase_points": 4,
    }
    return ExperimentConfig(**{**base, **fields})


class TestThresholds:
    def test_gap_thresholds_for_mle(self) -> None:
        assert default_thresholds("mle") == (1.0, 2.0, 3.0, 4.0, 6.0, 8.0)

    def test_score_thresholds_for_mld(self) -> None:
        assert all(0 < t < 1 for t in default_thresholds("mld"))


class TestPhaseSweep:
    def test_flip_rates_shrink_the_circle(self) -> None:
        sweep = phase_sweep({"X": 0.1, "Y": 0.0, "Z": 0.0}, 4)
        assert [p.phase for p in sweep] == pytest.approx([0, math.pi / 2, math.pi, 3 * math.pi / 2])
        assert sweep[0].x == pytest.approx(0.8)
        assert sweep[1].y == pytest.approx(1.0)
        assert sweep[2].x == pytest.approx(-0.8)


# ---------------------------------------------------------------------------
# Injection and factory
# ---------------------------------------------------------------------------


class TestRunInjection:
    def test_noiseless_bare_block_is_perfect(self) -> None:
        section = run_injection(_config(noise_preset="noiseless"))
        assert section.raw.point == pytest.approx(1.0)
        assert section.corrected.point == pytest.approx(1.0)
        assert section.perfect_fraction == 1.0
        assert section.flip_rates == {"X": 0.0, "Y": 0.0, "Z": 0.0}
        assert len(section.phase_sweep) == 4
        assert section.raw.ci_lo <= section.raw.median <= section.raw.ci_hi

    def test_steane_block(self) -> None:
        section = run_injection(_config(distance=3, shots=1_500))
        assert 0.0 < section.perfect_fraction < 1.0
        assert set(section.flip_rates) == {"X", "Y", "Z"}
        assert 0.5 < section.corrected.point <= 1.0

    def test_same_seed_same_section(self) -> None:
        cfg = _config(rescale=3.0)
        assert run_injection(cfg) == run_injection(cfg)


class TestRunFactory:
    def test_noiseless_factory_reproduces_ideal(self) -> None:
        section = run_factory(_config(noise_preset="noiseless"))
        assert section.acceptance == pytest.approx(1 / 6)
        assert section.ideal_acceptance == pytest.approx(1 / 6)
        assert section.ideal_fidelity == pytest.approx(1.0)
        assert section.stage_agreement == {"X": 1.0, "Y": 1.0, "Z": 1.0}
        labels = [point.label for point in section.curve]
        assert labels[0] == "all"
        assert labels[-1] == "perfect"
        assert len(labels) == 2 + len(default_thresholds("mle"))
        assert all(point.fidelity.point == pytest.approx(1.0) for point in section.curve)

    def test_noisy_factory_lowers_fidelity(self) -> None:
        section = run_factory(_config(rescale=2.0, shots=3_000, thresholds=(2.0,)))
        assert [point.label for point in section.curve] == ["all", "score>=2", "perfect"]
        assert section.curve[0].fidelity.point < 1.0
        assert section.injected is None

    def test_injection_estimate_is_attached(self) -> None:
        cfg = _config(noise_preset="noiseless")
        injection = run_injection(cfg)
        assert run_factory(cfg, injection).injected == injection.corrected


# ---------------------------------------------------------------------------
# Coherent probe
# ---------------------------------------------------------------------------


class TestCoherentProbe:
    def test_suppression_slope_is_quadratic(self) -> None:
        assert suppression_slope() == pytest.approx(2.0, abs=0.1)

    def test_slope_needs_two_angles(self) -> None:
        with pytest.raises(ValueError, match="at least two angles"):
            suppression_slope([0.0, 0.1])

    def test_probe_points(self) -> None:
        angles = [math.pi * t for t in (0.0, 0.16, 0.24, 0.32)]
        section = coherent_probe(angles)
        first, second, third, _ = section.points
        assert first.acceptance == pytest.approx(1 / 6)
        assert first.output_fidelity == pytest.approx(1.0)
        assert first.local_slope is None
        assert first.acceptance_coefficient is None
        assert second.acceptance == pytest.approx(0.1323083435, abs=1e-8)
        assert second.output_fidelity == pytest.approx(0.9933432848, abs=1e-8)
        assert second.local_slope is None
        assert second.acceptance_coefficient is not None
        assert second.acceptance_coefficient < 0
        assert third.local_slope is not None
        assert section.suppression_slope is not None


# ---------------------------------------------------------------------------
# Rescale study
# ---------------------------------------------------------------------------


class TestRescale:
    def test_crossing_is_interpolated(self) -> None:
        points = [
            RescalePoint(rescale=1.0, injected=0.90, distilled=0.94, acceptance=0.15),
            RescalePoint(rescale=2.0, injected=0.85, distilled=0.83, acceptance=0.12),
        ]
        assert _crossing(points) == pytest.approx(1.0 + 0.04 / 0.06)

    def test_no_crossing(self) -> None:
        points = [
            RescalePoint(rescale=1.0, injected=0.90, distilled=0.94, acceptance=0.15),
            RescalePoint(rescale=2.0, injected=0.85, distilled=0.86, acceptance=0.12),
        ]
        assert _crossing(points) is None

    def test_study_covers_grid(self) -> None:
        section = rescale_study(_config(rescale_grid=(1.0, 0.5)))
        assert [point.rescale for point in section.points] == [0.5, 1.0]
        assert all(0.0 <= point.distilled <= 1.0 for point in section.points)


# ---------------------------------------------------------------------------
# Cross-check and benchmark
# ---------------------------------------------------------------------------


class TestCrossCheck:
    def test_deviation_in_sigmas(self) -> None:
        check = CrossCheck("Z", 0.17, 0.16, 0.5, 0.5, 10_000)
        sigma = math.sqrt(0.16 * 0.84 / 10_000)
        assert check.deviation() == pytest.approx(0.01 / sigma)


class TestBench:
    def test_bare_factory_bench(self) -> None:
        section = bench(_config())
        assert section.detectors == 0
        assert section.mechanisms > 0
        assert section.sample_shots == 200
        assert section.decode_syndromes == 1
        assert section.sample_seconds >= 0.0

    def test_channel_learning_is_audited(self, isolated_audit_log: Path) -> None:
        run_factory(_config(noise_preset="noiseless", thresholds=(1.0,)))
        events = read_events(isolated_audit_log)
        learned = [e for e in events if e["event_type"] == "channel_learned"]
        assert len(learned) == 1
        assert learned[0]["payload"]["distance"] == 1
