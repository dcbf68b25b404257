"""Unit tests for src/channel/learning.py and compose.py."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from src.channel.compose import apply_flips, compose
from src.channel.ideal import ACCEPT_KEY, OUTCOMES, ideal_channel, outcome_statistics
from src.channel.learning import (
    ALL,
    PERFECT,
    LogicalChannel,
    learn_channel,
    learn_channels,
    pattern_text,
    reference_offset,
    reference_state_prep,
    stratum_label,
)
from src.circuit.noise import NoiseModel
from src.codes.css import CssCode
from src.exceptions import BasisMismatchError, ChannelError
from src.harness.runs import dense_cross_check


def _channel(basis: str, row: dict[int, float], shots: float = 100.0) -> LogicalChannel:
    tallies = np.zeros(OUTCOMES)
    for key, value in row.items():
        tallies[key] = value
    return LogicalChannel({basis: {ALL: tallies}}, {basis: shots})


class TestPatterns:
    def test_pattern_text_puts_output_first(self) -> None:
        assert pattern_text(1) == "10000"
        assert pattern_text(ACCEPT_KEY) == "01011"

    def test_stratum_label(self) -> None:
        assert stratum_label(2.5) == "score>=2.5"


# ---------------------------------------------------------------------------
# Reference inputs
# ---------------------------------------------------------------------------


class TestReference:
    def test_prep_is_clifford_only(self) -> None:
        circuit = reference_state_prep("Y")
        assert circuit.n_qubits == 5
        assert all(layer.tag == "input" for layer in circuit.layers)
        assert not any(
            gate.name in {"MAGIC", "RZ"} for layer in circuit.layers for gate in layer.gates
        )

    def test_unknown_basis_raises(self) -> None:
        with pytest.raises(ChannelError, match="Unknown basis"):
            reference_state_prep("W")

    @pytest.mark.parametrize("basis", ["X", "Y", "Z"])
    def test_bare_reference_reads_accepting_pattern(self, bare: CssCode, basis: str) -> None:
        assert reference_offset(bare, basis) == (0, 1, 0, 1, 1)

    def test_steane_reference_is_deterministic(self, steane: CssCode) -> None:
        offset = reference_offset(steane, "Z")
        assert len(offset) == 5


# ---------------------------------------------------------------------------
# Channel container
# ---------------------------------------------------------------------------


class TestLogicalChannel:
    def test_identity_channel(self) -> None:
        channel = LogicalChannel.identity()
        assert channel.bases == ("X", "Y", "Z")
        assert channel.non_identity_mass("Z") == 0.0
        assert channel.kept_fraction("X") == 1.0

    def test_masses(self) -> None:
        channel = _channel("Z", {0: 70, 1: 10, 2: 15, 3: 5})
        assert channel.non_identity_mass("Z") == pytest.approx(0.3)
        assert channel.syndrome_mass("Z") == pytest.approx(0.2)
        np.testing.assert_allclose(channel.distribution("Z")[:4], [0.7, 0.1, 0.15, 0.05])

    def test_unknown_basis_and_stratum(self) -> None:
        channel = _channel("Z", {0: 1})
        with pytest.raises(BasisMismatchError):
            channel.distribution("X")
        with pytest.raises(ChannelError, match="no stratum"):
            channel.distribution("Z", PERFECT)

    def test_empty_stratum_has_no_distribution(self) -> None:
        channel = LogicalChannel({"Z": {ALL: np.zeros(OUTCOMES)}}, {"Z": 10.0})
        assert channel.kept_fraction("Z") == 0.0
        with pytest.raises(ChannelError, match="kept no shots"):
            channel.distribution("Z")

    def test_merge_pools_bases_and_shots(self) -> None:
        merged = _channel("Z", {0: 90, 1: 10}).merge(_channel("Z", {0: 100}))
        assert merged.shots["Z"] == 200.0
        assert merged.non_identity_mass("Z") == pytest.approx(0.05)
        both = merged.merge(_channel("X", {0: 5}, shots=5.0))
        assert both.bases == ("X", "Z")

    def test_merge_weights_agreement(self) -> None:
        first = _channel("Z", {0: 100})
        first.agreement["Z"] = 1.0
        second = _channel("Z", {0: 300}, shots=300.0)
        second.agreement["Z"] = 0.5
        assert first.merge(second).agreement["Z"] == pytest.approx(0.625)

    def test_merge_rejects_mismatched_strata(self) -> None:
        other = LogicalChannel(
            {"Z": {ALL: np.eye(OUTCOMES)[0], PERFECT: np.eye(OUTCOMES)[0]}}, {"Z": 1.0}
        )
        with pytest.raises(ChannelError, match="different strata"):
            _channel("Z", {0: 1}).merge(other)

    def test_merge_rejects_conflicting_offsets(self) -> None:
        first = _channel("Z", {0: 1})
        first.offsets["Z"] = (0, 1, 0, 1, 1)
        second = _channel("Z", {0: 1})
        second.offsets["Z"] = (1, 1, 0, 1, 1)
        with pytest.raises(ChannelError, match="offsets disagree"):
            first.merge(second)

    def test_json_round_trip(self) -> None:
        channel = _channel("Y", {0: 75, 5: 25}, shots=120.0)
        channel.offsets["Y"] = (1, 1, 0, 1, 1)
        channel.agreement["Y"] = 0.9
        loaded = LogicalChannel.from_json(channel.to_json())
        np.testing.assert_allclose(loaded.distribution("Y"), channel.distribution("Y"))
        assert loaded.kept_shots("Y") == pytest.approx(100.0)
        assert loaded.shots == {"Y": 120.0}
        assert loaded.offsets == {"Y": (1, 1, 0, 1, 1)}
        assert loaded.agreement == {"Y": 0.9}

    def test_json_uses_pattern_strings(self) -> None:
        payload = json.loads(_channel("Z", {0: 3, 1: 1}).to_json())
        flips = payload["bases"]["Z"]["strata"][ALL]["flips"]
        assert flips == {"00000": 0.75, "10000": 0.25}

    @pytest.mark.parametrize(
        ("mutate", "message"),
        [
            (lambda p: p.update(format="other/9"), "Unsupported channel format"),
            (lambda p: p["bases"]["Z"]["strata"][ALL]["flips"].update({"1": 0.1}), "Bad flip"),
            (
                lambda p: p["bases"]["Z"]["strata"][ALL]["flips"].update({"00000": 0.5}),
                "not normalized",
            ),
            (lambda p: p["bases"].update(W=p["bases"].pop("Z")), "Unknown basis"),
        ],
    )
    def test_from_json_rejects_bad_payloads(self, mutate: object, message: str) -> None:
        payload = json.loads(_channel("Z", {0: 1}).to_json())
        mutate(payload)  # type: ignore[operator]
        with pytest.raises(ChannelError, match=message):
            LogicalChannel.from_json(json.dumps(payload))

    def test_from_json_rejects_garbage(self) -> None:
        with pytest.raises(ChannelError, match="not valid JSON"):
            LogicalChannel.from_json("{")


# ---------------------------------------------------------------------------
# Learning
# ---------------------------------------------------------------------------


class TestLearnChannel:
    def test_noiseless_channel_is_identity(self, bare: CssCode) -> None:
        channel = learn_channel(bare, NoiseModel.preset("noiseless"), "Z", 200, seed=1)
        assert channel.non_identity_mass("Z") == 0.0
        assert channel.kept_shots("Z") == 200.0
        assert channel.offsets["Z"] == (0, 1, 0, 1, 1)
        assert channel.agreement["Z"] == 1.0

    def test_noisy_bare_channel(self, bare: CssCode) -> None:
        channel = learn_channel(bare, NoiseModel(rescale=3.0), "X", 5_000, seed=2)
        assert channel.kept_shots("X") == 5_000.0
        assert 0.0 < channel.non_identity_mass("X") < 0.5
        # Without detectors every shot is a perfect-stabilizer shot.
        assert channel.kept_fraction("X", PERFECT) == 1.0
        assert channel.strata("X") == (ALL, PERFECT)

    def test_threshold_strata(self, bare: CssCode) -> None:
        channel = learn_channel(
            bare, NoiseModel(), "Z", 500, strata=(1.0, math.inf), seed=3
        )
        assert channel.strata("Z") == (ALL, PERFECT, "score>=1")

    def test_same_seed_same_channel(self, bare: CssCode) -> None:
        first = learn_channel(bare, NoiseModel(rescale=2.0), "Y", 2_000, seed=9)
        second = learn_channel(bare, NoiseModel(rescale=2.0), "Y", 2_000, seed=9)
        np.testing.assert_array_equal(first.tallies["Y"][ALL], second.tallies["Y"][ALL])

    def test_shots_must_be_positive(self, bare: CssCode) -> None:
        with pytest.raises(ChannelError, match="at least 1"):
            learn_channel(bare, NoiseModel(), "Z", 0)

    def test_all_bases(self, bare: CssCode) -> None:
        channel = learn_channels(bare, NoiseModel(), 300, seed=4)
        assert channel.bases == ("X", "Y", "Z")
        assert all(channel.shots[b] == 300.0 for b in channel.bases)

    def test_noiseless_steane_channel(self, steane: CssCode) -> None:
        channel = learn_channel(steane, NoiseModel.preset("noiseless"), "Z", 100, seed=5)
        assert channel.kept_shots("Z") == 100.0
        assert channel.kept_fraction("Z", PERFECT) == 1.0
        assert channel.non_identity_mass("Z") == 0.0
        assert channel.agreement["Z"] == 1.0

    @pytest.mark.slow
    def test_steane_channel_learns(self, steane: CssCode) -> None:
        channel = learn_channel(steane, NoiseModel(), "Z", 3_000, seed=5)
        assert channel.kept_shots("Z") == 3_000.0
        assert 0.0 < channel.kept_fraction("Z", PERFECT) < 1.0
        assert 0.0 <= channel.agreement["Z"] <= 1.0


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


class TestCompose:
    def test_identity_flips_leave_distribution(self) -> None:
        ideal = ideal_channel(basis="Z").distribution("Z")
        flips = np.zeros(OUTCOMES)
        flips[0] = 1.0
        np.testing.assert_allclose(apply_flips(flips, ideal), ideal)

    def test_output_flip_negates_expectation(self) -> None:
        ideal = ideal_channel(basis="Z").distribution("Z")
        flips = np.zeros(OUTCOMES)
        flips[1] = 1.0
        acceptance, expectation = outcome_statistics(apply_flips(flips, ideal))
        ideal_acceptance, ideal_expectation = outcome_statistics(ideal)
        assert acceptance == pytest.approx(ideal_acceptance)
        assert expectation == pytest.approx(-ideal_expectation)

    def test_syndrome_flip_moves_acceptance(self) -> None:
        ideal = ideal_channel(basis="Z").distribution("Z")
        flips = np.zeros(OUTCOMES)
        flips[2] = 1.0
        acceptance, _ = outcome_statistics(apply_flips(flips, ideal))
        assert acceptance == pytest.approx(ideal[ACCEPT_KEY ^ 2] + ideal[(ACCEPT_KEY ^ 2) | 1])

    def test_identity_channel_reproduces_ideal(self) -> None:
        stats = compose(LogicalChannel.identity(), ideal_channel())
        assert stats.acceptance == pytest.approx(1 / 6)
        assert stats.kept_fraction == 1.0
        assert stats.fidelity() == pytest.approx(1.0, abs=1e-9)
        assert stats.stratum == ALL

    def test_counts_use_accepted_shots(self) -> None:
        stats = compose(LogicalChannel.identity(), ideal_channel())
        counts = stats.counts()
        assert counts["Z"].n == pytest.approx(1 / 6)
        assert counts["Z"].expectation == pytest.approx(1 / math.sqrt(3))

    def test_missing_basis_in_channel(self) -> None:
        with pytest.raises(BasisMismatchError):
            compose(LogicalChannel.identity(["Z"]), ideal_channel())

    def test_missing_basis_in_ideal(self) -> None:
        with pytest.raises(BasisMismatchError):
            compose(LogicalChannel.identity(), ideal_channel(basis="Z"), bases=["X"])

    def test_output_vector_needs_all_bases(self) -> None:
        stats = compose(LogicalChannel.identity(["Z"]), ideal_channel(basis="Z"))
        with pytest.raises(ChannelError, match="all three bases"):
            stats.output_bloch()

    def test_noisy_channel_lowers_fidelity(self, bare: CssCode) -> None:
        channel = learn_channels(bare, NoiseModel(rescale=2.0), 5_000, seed=6)
        stats = compose(channel, ideal_channel())
        assert stats.fidelity() < 0.999
        assert 0.0 < stats.acceptance < 1.0

    def test_noiseless_factory_matches_exact_simulation(self) -> None:
        checks = dense_cross_check(NoiseModel.preset("noiseless"), 200, seed=8)
        for check in checks:
            assert check.composed_acceptance == pytest.approx(check.dense_acceptance, abs=1e-9)
            assert check.composed_expectation == pytest.approx(check.dense_expectation, abs=1e-9)

    def test_noisy_factory_within_sampling_error(self) -> None:
        checks = dense_cross_check(NoiseModel(rescale=2.0), 3_000, seed=8)
        assert all(check.deviation() < 5.0 for check in checks), checks

    @pytest.mark.slow
    def test_bare_factory_matches_exact_simulation(self) -> None:
        checks = dense_cross_check(NoiseModel(rescale=2.0), 40_000, seed=8)
        assert [check.basis for check in checks] == ["X", "Y", "Z"]
        for check in checks:
            assert check.deviation() < 5.0, check
