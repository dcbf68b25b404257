"""Unit tests for src/synth/."""

from __future__ import annotations

import numpy as np
import pytest

from src.codes.color import color_code
from src.codes.css import CssCode
from src.exceptions import (
    BudgetExhaustedError,
    InjectionVerificationError,
    MalformedMatrixError,
    SynthesisError,
    UnsupportedDistanceError,
)
from src.pauli.bloch import BlochVector
from src.synth.encoder import (
    circuit_from_rops,
    input_gates,
    logical_operators,
    synthesize_injection,
    verify_injection,
)
from src.synth.layout import check_order, layout_summary, order_violations, search_order
from src.synth.published import published_sequence
from src.synth.reduction import (
    ReductionMatrix,
    RowOp,
    RowOpSequence,
    SearchSettings,
    gaussian_reduction,
    reduce,
    replay,
)

# ---------------------------------------------------------------------------
# Row operations
# ---------------------------------------------------------------------------


class TestRowOps:
    def test_parse_accepts_both_arrows(self) -> None:
        assert RowOp.parse("3->2") == RowOp(3, 2)
        assert RowOp.parse("3→2") == RowOp(3, 2)

    def test_from_ops_packs_earliest_layer(self) -> None:
        sequence = RowOpSequence.from_ops([RowOp(0, 1), RowOp(1, 2), RowOp(3, 4)])
        assert sequence.depth == 2
        assert str(sequence) == "0->1, 3->4 | 1->2"
        assert len(sequence) == 3

    def test_self_loop_raises(self) -> None:
        with pytest.raises(MalformedMatrixError, match="itself"):
            RowOpSequence.from_ops([RowOp(2, 2)])

    def test_explicit_layer_reusing_row_raises(self) -> None:
        with pytest.raises(MalformedMatrixError, match="uses a row twice"):
            RowOpSequence.parse("0->1, 1->2 | 3->4")

    def test_empty_sequence(self) -> None:
        sequence = RowOpSequence.parse("")
        assert sequence.depth == 0
        assert sequence.ops == []


class TestPublishedSequences:
    def test_distance_three_shape(self) -> None:
        sequence = published_sequence(3)
        assert (len(sequence), sequence.depth) == (9, 3)

    def test_distance_five_shape(self) -> None:
        sequence = published_sequence(5)
        assert (len(sequence), sequence.depth) == (24, 5)

    def test_unknown_distance_raises(self) -> None:
        with pytest.raises(UnsupportedDistanceError):
            published_sequence(7)

    @pytest.mark.parametrize(("distance", "injected_row"), [(3, 6), (5, 7)])
    def test_published_sequence_reduces(self, distance: int, injected_row: int) -> None:
        initial = ReductionMatrix.from_code(color_code(distance))
        final, _ = replay(initial, published_sequence(distance))
        assert final.is_reduced()
        assert final.logical_hosts() == [injected_row]

    def test_distance_three_check_hosts(self, steane: CssCode) -> None:
        final, column_ops = replay(ReductionMatrix.from_code(steane), published_sequence(3))
        assert final.check_hosts() == [0, 2, 4]
        assert column_ops


# ---------------------------------------------------------------------------
# Reduction search
# ---------------------------------------------------------------------------


class TestReduction:
    def test_matrix_shape_and_bound(self, steane: CssCode) -> None:
        matrix = ReductionMatrix.from_code(steane)
        assert matrix.entries.shape == (7, 4)
        assert matrix.column_roles == ["check", "check", "check", "logical"]
        assert matrix.lower_bound() == 2
        assert not matrix.is_reduced()

    def test_non_self_dual_code_rejected(self, steane: CssCode) -> None:
        with pytest.raises(SynthesisError, match="self-dual"):
            ReductionMatrix.from_code(steane.with_check_bit_flipped("X", 0, 4))

    def test_replay_rejects_out_of_range_op(self, steane: CssCode) -> None:
        with pytest.raises(MalformedMatrixError, match="outside"):
            replay(ReductionMatrix.from_code(steane), RowOpSequence.parse("0->9"))

    @pytest.mark.parametrize("distance", [3, 5])
    def test_gaussian_reduction_always_reduces(self, distance: int) -> None:
        initial = ReductionMatrix.from_code(color_code(distance))
        final, _ = replay(initial, gaussian_reduction(initial))
        assert final.is_reduced()

    def test_search_reduces_steane(self, steane: CssCode) -> None:
        result = reduce(steane)
        assert result.final.is_reduced()
        assert result.method in {"search", "gaussian"}
        assert result.stats["ops"] == len(result.sequence)

    def test_exhausted_budget_falls_back(self, steane: CssCode) -> None:
        result = reduce(steane, SearchSettings(node_budget=1))
        assert result.method == "gaussian"
        assert result.final.is_reduced()

    def test_exhausted_budget_without_fallback_raises(self, steane: CssCode) -> None:
        with pytest.raises(BudgetExhaustedError):
            reduce(steane, SearchSettings(node_budget=1, allow_fallback=False))


# ---------------------------------------------------------------------------
# Encoder circuits
# ---------------------------------------------------------------------------


class TestInputGates:
    def test_plus_state(self) -> None:
        assert input_gates("plus") == [[("SQRT_Y", None)]]

    def test_magic_with_rotation(self) -> None:
        assert input_gates("magic", 0.2) == [[("MAGIC", None)], [("RZ", 0.2)]]

    def test_unknown_state_raises(self) -> None:
        with pytest.raises(SynthesisError, match="Unknown injected state"):
            input_gates("minus")


class TestEncoder:
    def test_steane_encoder_layout(self, steane: CssCode) -> None:
        circuit, result = synthesize_injection(steane)
        assert result.method == "published"
        assert circuit.qubits_with_role("injected") == [6]
        assert circuit.two_qubit_count() == 9
        assert len(circuit.cz_layers()) == 3

    def test_steane_encoder_verifies(self, steane: CssCode) -> None:
        circuit, _ = synthesize_injection(steane)
        report = verify_injection(circuit, steane)
        assert report.ok, report.failures
        assert report.checked == ["zero", "plus", "plus_i"]
        assert report.logical_bloch is not None
        np.testing.assert_allclose(
            report.logical_bloch, BlochVector.magic().as_array(), atol=1e-9
        )

    def test_rotated_input_is_carried_to_logical(self, steane: CssCode) -> None:
        circuit, _ = synthesize_injection(steane, angle=0.3)
        report = verify_injection(circuit, steane)
        assert report.ok, report.failures
        expected = BlochVector.magic().rotated_z(0.3).as_array()
        np.testing.assert_allclose(report.logical_bloch, expected, atol=1e-9)

    def test_searched_encoder_verifies(self, steane: CssCode) -> None:
        circuit, _ = synthesize_injection(steane, source="search")
        assert verify_injection(circuit, steane).ok

    def test_bare_qubit_encoder(self, bare: CssCode) -> None:
        circuit, _ = synthesize_injection(bare)
        assert circuit.two_qubit_count() == 0
        assert verify_injection(circuit, bare).ok

    def test_unknown_source_raises(self, steane: CssCode) -> None:
        with pytest.raises(SynthesisError, match="Unknown synthesis source"):
            synthesize_injection(steane, source="oracle")

    def test_unreduced_matrix_rejected(self, steane: CssCode) -> None:
        initial = ReductionMatrix.from_code(steane)
        with pytest.raises(MalformedMatrixError):
            circuit_from_rops(RowOpSequence(), initial)

    def test_missing_encoder_fails_verification(self, steane: CssCode) -> None:
        circuit, _ = synthesize_injection(steane)
        report = verify_injection(circuit.without_tag("encode"), steane)
        assert not report.ok
        assert "reads random" in report.failures[0]
        with pytest.raises(InjectionVerificationError):
            report.raise_if_invalid()

    def test_qubit_count_mismatch_reported(self, bare: CssCode, steane: CssCode) -> None:
        circuit, _ = synthesize_injection(bare)
        report = verify_injection(circuit, steane)
        assert report.failures == ["circuit has 1 qubits, code has 7"]

    def test_logical_y_carries_sign(self, steane: CssCode) -> None:
        logicals = logical_operators(steane)
        assert str(logicals["Y"]) == "-YYIIIYI"
        assert logicals["Y"].is_hermitian()

    def test_distance_five_published_encoder(self) -> None:
        circuit, result = synthesize_injection(color_code(5))
        assert result.final.is_reduced()
        assert circuit.qubits_with_role("injected") == [7]
        assert circuit.two_qubit_count() == 24

    @pytest.mark.slow
    def test_distance_five_encoder_verifies(self) -> None:
        code = color_code(5)
        circuit, _ = synthesize_injection(code)
        assert verify_injection(circuit, code).ok


# ---------------------------------------------------------------------------
# Atom order
# ---------------------------------------------------------------------------


class TestLayout:
    def test_nested_gates_violate(self) -> None:
        layers = [[(0, 3), (1, 2)]]
        assert order_violations(layers, [0, 1, 2, 3]) == 1
        assert not check_order(layers, [0, 1, 2, 3])

    def test_identity_kept_when_valid(self) -> None:
        assert search_order([[(0, 1), (2, 3)]], 4) == [0, 1, 2, 3]

    def test_search_finds_minimal_displacement(self) -> None:
        layers = [[(0, 3), (1, 2)]]
        order = search_order(layers, 4)
        assert order is not None
        assert check_order(layers, order)
        assert sum(abs(position - qubit) for qubit, position in enumerate(order)) == 2

    def test_too_many_qubits_rejected(self) -> None:
        with pytest.raises(ValueError, match="at most"):
            search_order([[(0, 1)]], 21)

    def test_summary_for_steane_encoder(self, steane: CssCode) -> None:
        circuit, _ = synthesize_injection(steane)
        summary = layout_summary(circuit.cz_layers(), circuit.n_qubits)
        assert summary["layers"] == 3
        assert summary["two_qubit_gates"] == 9
        if summary["order"] is not None:
            assert check_order(circuit.cz_layers(), summary["order"])

    def test_local_search_above_exhaustive_limit(self) -> None:
        layers = [[(0, 9), (1, 8)]]
        order = search_order(layers, 10, seed=3)
        assert order is not None
        assert check_order(layers, order)
        assert sorted(order) == list(range(10))
