"""Unit tests for src/circuit/ir.py, noise.py, textio.py and factory.py."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.circuit.factory import (
    ACCEPT_PATTERN,
    build_factory_circuit,
    build_injection_block,
    distillation_circuit,
    transversal_gate,
)
from src.circuit.ir import Circuit, Gate
from src.circuit.noise import NoiseModel, NoiseSite, noise_sites
from src.circuit.textio import dump_circuit, format_circuit, load_circuit, parse_circuit
from src.codes.color import color_code
from src.codes.css import CssCode
from src.exceptions import (
    CircuitError,
    CircuitFormatError,
    ConfigurationError,
    LayerConflictError,
    QubitRangeError,
)
from src.pauli.dense import dense_run, measurement_distribution
from src.pauli.tableau import tableau_run

ACCEPT_KEY = sum(bit << (i + 1) for i, bit in enumerate(ACCEPT_PATTERN))

# ---------------------------------------------------------------------------
# Circuit IR
# ---------------------------------------------------------------------------


class TestCircuitIr:
    def test_layer_rejects_reused_qubit(self) -> None:
        circuit = Circuit(3)
        with pytest.raises(LayerConflictError):
            circuit.add_layer([("CZ", (0, 1)), ("H", (1,))])

    def test_layer_rejects_out_of_range_qubit(self) -> None:
        with pytest.raises(QubitRangeError):
            Circuit(2).add_single("H", [2])

    def test_parametric_gate_needs_angle(self) -> None:
        with pytest.raises(CircuitError, match="needs an angle"):
            Gate("RZ", (0,))

    def test_wrong_arity_raises(self) -> None:
        with pytest.raises(CircuitError, match="expects 2 qubits"):
            Gate("CZ", (0,))

    def test_measurements_follow_operation_order(self) -> None:
        circuit = Circuit(2)
        circuit.add_layer([("M_X", (1,)), ("M_Y", (0,))])
        circuit.add_single("M_Z", [1])
        assert circuit.measurements() == [(1, "X"), (0, "Y"), (1, "Z")]
        assert circuit.measurement_count() == 3

    def test_inverse_reverses_and_negates_angles(self) -> None:
        circuit = Circuit(2, roles={0: "injected"})
        circuit.add_single("RZ", [0], angle=0.4)
        circuit.add_single("S", [1])
        circuit.add_layer([("CZ", (0, 1))])
        inverse = circuit.inverse()
        names = [gate.name for gate in inverse.operations()]
        assert names == ["CZ", "S_DAG", "RZ"]
        assert inverse.layers[-1].gates[0].angle == pytest.approx(-0.4)

    def test_inverse_rejects_measurement(self) -> None:
        circuit = Circuit(1)
        circuit.add_single("M_Z", [0])
        with pytest.raises(CircuitError, match="Cannot invert"):
            circuit.inverse()

    def test_extend_shifts_annotations(self) -> None:
        first = Circuit(2)
        first.add_single("M_Z", [0, 1])
        second = Circuit(1)
        second.add_single("M_Z", [0])
        second.add_detector([0], label="late")
        first.extend(second, mapping=[1])
        assert first.detectors[0].records == (2,)
        assert first.measurements()[-1] == (1, "Z")

    def test_validate_rejects_rz_after_entangling_layer(self) -> None:
        circuit = Circuit(2, roles={0: "injected"})
        circuit.add_layer([("CZ", (0, 1))])
        circuit.add_single("RZ", [0], angle=0.1)
        with pytest.raises(CircuitError, match="follows an entangling layer"):
            circuit.validate()

    def test_validate_rejects_rz_on_data_qubit(self) -> None:
        circuit = Circuit(2, roles={0: "injected", 1: "data"})
        circuit.add_single("RZ", [1], angle=0.1)
        with pytest.raises(CircuitError, match="non-injected"):
            circuit.validate()

    def test_validate_rejects_dangling_detector(self) -> None:
        circuit = Circuit(1)
        circuit.add_detector([0], label="ghost")
        with pytest.raises(CircuitError, match="ghost"):
            circuit.validate()

    def test_summary_counts(self) -> None:
        circuit = distillation_circuit(measure=True)
        summary = circuit.summary()
        assert summary["qubits"] == 5
        assert summary["two_qubit_gates"] == 6
        assert summary["entangling_layers"] == 3
        assert summary["measurements"] == 5


# ---------------------------------------------------------------------------
# Noise model
# ---------------------------------------------------------------------------


class TestNoiseModel:
    def test_cz_terms_split_by_bias(self) -> None:
        noise = NoiseModel()
        terms = dict(noise.cz_terms())
        assert len(terms) == 15
        assert sum(terms.values()) == pytest.approx(noise.p_cz)
        assert terms["ZZ"] == pytest.approx(noise.p_cz * 0.6 / 3)
        assert terms["XY"] == pytest.approx(noise.p_cz * 0.4 / 12)

    def test_presets(self) -> None:
        assert NoiseModel.preset("matched").rescale == pytest.approx(1.25)
        assert NoiseModel.preset("baseline", rescale=2.0).rescale == pytest.approx(2.0)
        assert NoiseModel.preset("noiseless").is_noiseless()
        assert not NoiseModel.preset("baseline").is_noiseless()

    def test_unknown_preset_raises(self) -> None:
        with pytest.raises(ConfigurationError, match="Unknown noise preset"):
            NoiseModel.preset("ideal")

    def test_scaled_multiplies_rescale(self) -> None:
        assert NoiseModel(rescale=1.5).scaled(2.0).rescale == pytest.approx(3.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"p_cz": 0.6},
            {"bias_zz": 1.5},
            {"rescale": 0.0},
            {"p_meas": 0.3, "rescale": 2.0},
            {"p_idle": 0.3, "rescale": 2.0},
            {"p_move_z": 0.2, "rescale": 3.0},
        ],
    )
    def test_invalid_rates_raise(self, kwargs: dict[str, float]) -> None:
        with pytest.raises(ValidationError):
            NoiseModel(**kwargs)

    def test_scaling_rechecks_every_rate(self) -> None:
        noise = NoiseModel(p_idle=0.2)
        assert noise.scaled(2.0).rescale == pytest.approx(2.0)
        with pytest.raises(ValidationError, match="below 0.5"):
            noise.scaled(3.0)
        with pytest.raises(ValidationError, match="below 0.5"):
            NoiseModel.preset("baseline", rescale=3_000.0)

    def test_unknown_field_rejected(self) -> None:
        with pytest.raises(ValidationError):
            NoiseModel(p_leak=0.1)  # type: ignore[call-arg]


class TestNoiseSites:
    def test_site_description_and_slot(self) -> None:
        site = NoiseSite(3, True, (0, 1), "ZZ", 0.1, "cz")
        assert site.describe() == "cz:after:L3:Z0,Z1"
        assert site.slot == 7

    def test_noiseless_model_has_no_sites(self, steane: CssCode) -> None:
        circuit = build_injection_block(steane, basis="Z")
        assert noise_sites(circuit, NoiseModel.preset("noiseless")) == []

    def test_global_and_local_single_qubit_rates(self) -> None:
        noise = NoiseModel()
        everywhere = Circuit(2)
        everywhere.add_single("H", [0, 1])
        one = Circuit(2)
        one.add_single("H", [0])
        global_rates = {s.probability for s in noise_sites(everywhere, noise)}
        local_rates = {s.probability for s in noise_sites(one, noise)}
        assert len(global_rates) == len(local_rates) == 1
        assert global_rates.pop() == pytest.approx(noise.p_1q_global / 3)
        assert local_rates.pop() == pytest.approx(noise.p_1q_local / 3)

    def test_move_layer_adds_dephasing(self) -> None:
        circuit = Circuit(3)
        circuit.add_layer([("CZ", (0, 1))], move=True)
        sources = [site.source for site in noise_sites(circuit, NoiseModel())]
        assert sources.count("move") == 2
        assert sources.count("idle") == 3
        assert sources.count("cz") == 15

    def test_measurement_flip_letter_follows_basis(self) -> None:
        circuit = Circuit(1)
        circuit.add_single("M_X", [0])
        (site,) = noise_sites(circuit, NoiseModel())
        assert site.letters == "Z"
        assert not site.after

    def test_input_layers_are_noiseless_and_prep_flip_deferred(self, steane: CssCode) -> None:
        circuit = build_injection_block(steane, angle=0.2, basis="Z")
        input_layers = [i for i, layer in enumerate(circuit.layers) if layer.tag == "input"]
        injected = circuit.qubits_with_role("injected")[0]
        sites = noise_sites(circuit, NoiseModel())
        assert not any(site.layer in input_layers[:-1] for site in sites)
        deferred = [s for s in sites if s.source == "prep" and s.qubits == (injected,)]
        assert len(deferred) == 1
        assert deferred[0].layer == input_layers[-1]
        assert deferred[0].after

    def test_rescale_multiplies_probabilities(self, steane: CssCode) -> None:
        circuit = build_injection_block(steane, basis="X")
        base = noise_sites(circuit, NoiseModel())
        doubled = noise_sites(circuit, NoiseModel(rescale=2.0))
        assert len(base) == len(doubled)
        for a, b in zip(base, doubled, strict=True):
            assert b.probability == pytest.approx(2 * a.probability)


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


class TestCircuitText:
    def test_format_groups_pairs_on_one_line(self) -> None:
        circuit = Circuit(4)
        circuit.add_layer([("CZ", (0, 1)), ("CZ", (2, 3))], move=True, tag="encode")
        text = format_circuit(circuit)
        assert "LAYER 0 move tag=encode" in text
        assert "CZ 0 1 2 3" in text

    def test_file_round_trip_keeps_factory_structure(
        self, steane: CssCode, tmp_path: Path
    ) -> None:
        circuit = build_factory_circuit(steane, angles=[0.1, 0, 0, 0, 0], output_basis="Y")
        path = tmp_path / "factory.txt"
        dump_circuit(circuit, path)
        loaded = load_circuit(path)
        assert loaded.summary() == circuit.summary()
        assert loaded.roles == circuit.roles
        assert loaded.observables == circuit.observables
        assert [g.angle for g in loaded.operations() if g.name == "RZ"] == [0.1]

    @pytest.mark.parametrize(
        ("text", "message"),
        [
            ("LAYER 0\nH 0\n", "missing '# qubits: n'"),
            ("# qubits: 1\nH 0\n", "before the first LAYER"),
            ("# qubits: 1\nLAYER 1\n", "expected 'LAYER 0'"),
            ("# qubits: 2\nLAYER 0\nCZ 0 1 1\n", "multiple of 2"),
            ("# qubits: 1\nLAYER 0\nRZ(abc) 0\n", "bad angle"),
            ("# qubits: 1\nLAYER 0\nFOO 0\n", "Unknown gate"),
            ("# qubits: 1\nLAYER 0\nM_Z 0\nDETECTOR 0 offset=x\n", "bad offset"),
        ],
    )
    def test_malformed_text_raises(self, text: str, message: str) -> None:
        with pytest.raises(CircuitFormatError, match=message):
            parse_circuit(text)

    def test_parsed_circuit_is_validated(self) -> None:
        text = "# qubits: 2\n# role: 0 injected\nLAYER 0\nCZ 0 1\nLAYER 1\nRZ(0.1) 0\n"
        with pytest.raises(CircuitError, match="follows an entangling layer"):
            parse_circuit(text)


# ---------------------------------------------------------------------------
# Factory
# ---------------------------------------------------------------------------


class TestFactory:
    def test_transversal_phase_gates(self, steane: CssCode) -> None:
        assert transversal_gate("S", steane) == "S_DAG"
        assert transversal_gate("SQRT_X", steane) == "SQRT_X_DAG"
        assert transversal_gate("S", color_code(5)) == "S"
        assert transversal_gate("CZ", steane) == "CZ"

    def test_transversal_gate_unknown(self, steane: CssCode) -> None:
        with pytest.raises(CircuitError, match="no transversal implementation"):
            transversal_gate("MAGIC", steane)

    def test_distillation_readout_basis(self) -> None:
        circuit = distillation_circuit(measure=True, output_basis="Y")
        assert circuit.measurements() == [(0, "Y"), (1, "Z"), (2, "Z"), (3, "Z"), (4, "Z")]
        with pytest.raises(CircuitError):
            distillation_circuit(measure=True, output_basis="W")

    def test_bare_factory_layout(self, bare: CssCode) -> None:
        circuit = build_factory_circuit(bare)
        assert circuit.n_qubits == 5
        assert len(circuit.detectors) == 0
        assert len(circuit.observables) == 5
        assert circuit.two_qubit_count() == 6

    def test_steane_factory_layout(self, steane: CssCode) -> None:
        circuit = build_factory_circuit(steane)
        assert circuit.n_qubits == 35
        assert len(circuit.detectors) == 15
        assert circuit.detectors[0].label == "block1:Z0"
        assert circuit.detectors[-1].label == "block0:Z2"
        assert [obs.label for obs in circuit.observables] == [
            f"block{b}:LZ" for b in range(5)
        ]
        assert circuit.two_qubit_count() == 5 * 9 + 6 * 7
        assert circuit.qubits_with_role("injected") == [6, 13, 20, 27, 34]

    def test_y_output_logical_offset(self, steane: CssCode) -> None:
        circuit = build_factory_circuit(steane, output_basis="Y")
        assert circuit.observables[0].offset == 1
        assert circuit.observables[0].label == "block0:LY"

    def test_angles_add_rotation_layer(self, bare: CssCode) -> None:
        circuit = build_factory_circuit(bare, angles=[0.1] * 5)
        assert len(circuit.layers_tagged("input")) == 2

    def test_wrong_angle_count_raises(self, bare: CssCode) -> None:
        with pytest.raises(CircuitError, match="Expected 5 input angles"):
            build_factory_circuit(bare, angles=[0.1, 0.2])

    def test_measuring_input_fragment_rejected(self, bare: CssCode) -> None:
        fragment = Circuit(5)
        fragment.add_single("M_Z", [0])
        with pytest.raises(CircuitError, match="must not measure"):
            build_factory_circuit(bare, input_fragment=fragment)

    def test_noiseless_bare_factory_accepts_one_sixth(self, bare: CssCode) -> None:
        circuit = build_factory_circuit(bare)
        dist = measurement_distribution(dense_run(circuit), circuit.measurements())
        assert dist[ACCEPT_KEY] + dist[ACCEPT_KEY + 1] == pytest.approx(1 / 6, abs=1e-9)

    @pytest.mark.parametrize(
        ("injected", "basis"), [("zero", "Z"), ("plus", "X"), ("plus_i", "Y")]
    )
    def test_readout_parities_match_offsets(
        self, steane: CssCode, injected: str, basis: str
    ) -> None:
        circuit = build_injection_block(steane, injected=injected, basis=basis)
        for seed in range(3):
            record = tableau_run(circuit, seed).record
            for annotation in (*circuit.detectors, *circuit.observables):
                parity = int(np.bitwise_xor.reduce(record[list(annotation.records)]))
                assert parity == annotation.offset, annotation.label
