"""Encoding circuits from row-op sequences, and their verification.

Each row op ``s -> t`` becomes ``CNOT(s, t)`` in the encoder, emitted in
reverse order and rewritten for a CZ-native gate set as
``SQRT_Y_DAG(t); CZ(s, t); SQRT_Y(t)``. Single-qubit gates waiting on a
qubit are held back until the next entangling layer so that a ``SQRT_Y``
followed by a ``SQRT_Y_DAG`` cancels before it is ever emitted.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from src.circuit.ir import Circuit, Gate
from src.codes.css import CssCode
from src.config import config
from src.exceptions import InjectionVerificationError, MalformedMatrixError, SynthesisError
from src.pauli.dense import bloch_of, dense_run
from src.pauli.pauli import PauliString
from src.pauli.tableau import tableau_run
from src.synth.published import published_sequence
from src.synth.reduction import (
    ReductionMatrix,
    ReductionResult,
    RowOpSequence,
    SearchSettings,
    reduce,
    replay,
)

logger = logging.getLogger(__name__)

__all__ = [
    "INPUT_STATES",
    "InjectionReport",
    "circuit_from_rops",
    "input_gates",
    "logical_operators",
    "synthesize_injection",
    "verify_injection",
]

# Gates turning |0> into each injectable input state.
INPUT_STATES: dict[str, tuple[str, ...]] = {
    "zero": (),
    "plus": ("SQRT_Y",),
    "plus_i": ("SQRT_X_DAG",),
    "magic": ("MAGIC",),
}

_EXPECTED_LOGICAL = {"zero": "Z", "plus": "X", "plus_i": "Y"}
_INVERSE_PAIRS = {("SQRT_Y", "SQRT_Y_DAG"), ("SQRT_Y_DAG", "SQRT_Y")}


def input_gates(kind: str, angle: float | None = None) -> list[list[tuple[str, float | None]]]:
    """Input-segment layers, as ``(gate, angle)`` lists, preparing ``kind`` on one qubit."""

    if kind not in INPUT_STATES:
        raise SynthesisError(f"Unknown injected state {kind!r}")
    layers: list[list[tuple[str, float | None]]] = [[(name, None)] for name in INPUT_STATES[kind]]
    if angle:
        layers.append([("RZ", float(angle))])
    return layers


def _cancel(gates: list[str]) -> list[str]:
    stack: list[str] = []
    for name in gates:
        if stack and (stack[-1], name) in _INVERSE_PAIRS:
            stack.pop()
        else:
            stack.append(name)
    return stack


def _flush(circuit: Circuit, pending: dict[int, list[str]], cancel: bool) -> None:
    queues = {q: (_cancel(names) if cancel else list(names)) for q, names in pending.items()}
    depth = max((len(names) for names in queues.values()), default=0)
    for step in range(depth):
        gates = [
            Gate(names[step], (q,)) for q, names in sorted(queues.items()) if step < len(names)
        ]
        circuit.add_layer(gates, tag="encode")
    for q in pending:
        pending[q] = []


def circuit_from_rops(
    sequence: RowOpSequence,
    final: ReductionMatrix,
    *,
    injected: str = "magic",
    angle: float | None = None,
    cancel: bool = True,
) -> Circuit:
    """Build the CZ-native encoder for a fully reduced matrix.

    Rows hosting a check column start in ``|+>``, the row hosting the logical
    column receives the injected state and every other row stays in ``|0>``.
    """

    if not final.is_reduced():
        raise MalformedMatrixError("Final matrix must have weight-one columns on distinct rows")
    logical_rows = final.logical_hosts()
    if len(logical_rows) != 1:
        raise MalformedMatrixError("Exactly one logical column is supported")
    n = final.n_rows
    psi = logical_rows[0]

    circuit = Circuit(n)
    circuit.roles = {q: "data" for q in range(n)}
    circuit.roles[psi] = "injected"
    circuit.add_single("PREP_Z", range(n), tag="prep")
    for layer in input_gates(injected, angle):
        circuit.add_layer([Gate(name, (psi,), value) for name, value in layer], tag="input")

    pending: dict[int, list[str]] = {q: [] for q in range(n)}
    for host in final.check_hosts():
        pending[host].append("SQRT_Y")
    for layer in reversed(sequence.layers):
        for op in layer:
            pending[op.target].append("SQRT_Y_DAG")
        _flush(circuit, pending, cancel)
        circuit.add_layer(
            [Gate("CZ", (op.source, op.target)) for op in layer], move=True, tag="encode"
        )
        for op in layer:
            pending[op.target] = ["SQRT_Y"]
    _flush(circuit, pending, cancel)
    return circuit


def synthesize_injection(
    code: CssCode,
    *,
    source: str = "published",
    injected: str = "magic",
    angle: float | None = None,
    settings: SearchSettings | None = None,
) -> tuple[Circuit, ReductionResult]:
    """Encoder for ``code`` from the published sequence or from a fresh search."""

    if source == "search":
        result = reduce(code, settings)
    elif source == "published":
        initial = ReductionMatrix.from_code(code)
        sequence = published_sequence(code.d)
        final, column_ops = replay(initial, sequence)
        if not final.is_reduced():
            raise SynthesisError(f"Published sequence does not reduce {code.label}")
        result = ReductionResult(
            sequence=sequence,
            column_ops=column_ops,
            initial=initial,
            final=final,
            method="published",
            stats={"ops": len(sequence), "layers": sequence.depth},
        )
    else:
        raise SynthesisError(f"Unknown synthesis source {source!r}")
    circuit = circuit_from_rops(result.sequence, result.final, injected=injected, angle=angle)
    logger.info(
        "Synthesized %s encoder: %d CZ gates in %d layers (%s)",
        code.label,
        circuit.two_qubit_count(),
        len(circuit.cz_layers()),
        result.method,
    )
    return circuit, result


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def logical_operators(code: CssCode) -> dict[str, PauliString]:
    """Logical ``X``, ``Y = i X Z`` and ``Z`` of the first logical qubit."""

    lx = PauliString.from_support(code.n, code.logical_x_support(), "X")
    lz = PauliString.from_support(code.n, code.logical_z_support(), "Z")
    product = lx * lz
    return {"X": lx, "Y": product.with_phase(product.phase + 1), "Z": lz}


@dataclass
class InjectionReport:
    label: str
    failures: list[str] = field(default_factory=list)
    checked: list[str] = field(default_factory=list)
    logical_bloch: tuple[float, float, float] | None = None

    @property
    def ok(self) -> bool:
        return not self.failures

    def raise_if_invalid(self) -> None:
        if self.failures:
            raise InjectionVerificationError(self.failures[0])


def _with_input(circuit: Circuit, injected: list[int], gates: Iterable[str]) -> Circuit:
    names = list(gates)
    rebuilt = Circuit(circuit.n_qubits, roles=dict(circuit.roles))
    inserted = False
    for layer in circuit.layers:
        if layer.tag == "input":
            continue
        if not inserted and layer.tag != "prep":
            for name in names:
                rebuilt.add_layer([Gate(name, (q,)) for q in injected], tag="input")
            inserted = True
        rebuilt.add_layer(layer.gates, move=layer.move, tag=layer.tag)
    if not inserted:
        for name in names:
            rebuilt.add_layer([Gate(name, (q,)) for q in injected], tag="input")
    return rebuilt


def verify_injection(circuit: Circuit, code: CssCode) -> InjectionReport:
    """Check that ``circuit`` encodes its injected qubit into ``code``.

    The injected preparation is swapped for ``|0>``, ``|+>`` and ``|+i>`` in
    turn; every code check must then read ``+1`` and the matching logical
    operator must equal the physical input. Small circuits are additionally
    run on the dense simulator with their own input to compare logical and
    physical Bloch vectors.
    """

    report = InjectionReport(label=code.label)
    injected = circuit.qubits_with_role("injected")
    if len(injected) != 1:
        report.failures.append(f"expected one injected qubit, found {len(injected)}")
        return report
    if circuit.n_qubits != code.n:
        report.failures.append(f"circuit has {circuit.n_qubits} qubits, code has {code.n}")
        return report

    checks = [
        (f"X check {i}", PauliString.from_support(code.n, s, "X"))
        for i, s in enumerate(code.x_supports())
    ]
    checks += [
        (f"Z check {i}", PauliString.from_support(code.n, s, "Z"))
        for i, s in enumerate(code.z_supports())
    ]
    logicals = logical_operators(code)

    for state, basis in _EXPECTED_LOGICAL.items():
        run = tableau_run(_with_input(circuit, injected, INPUT_STATES[state]), seed=0)
        report.checked.append(state)
        for name, check in checks:
            value = run.tableau.peek(check)
            if value != 1:
                reading = "random" if value == 0 else str(value)
                report.failures.append(f"input {state}: {name} reads {reading}")
                return report
        value = run.tableau.peek(logicals[basis])
        if value != 1:
            report.failures.append(f"input {state}: logical {basis} reads {value}, expected +1")
            return report

    if circuit.n_qubits <= config.dense_max_qubits:
        physical = Circuit(1)
        for layer in circuit.layers_tagged("input"):
            physical.add_layer(
                [Gate(g.name, (0,), g.angle) for g in layer.gates if g.qubits[0] == injected[0]]
            )
        expected = bloch_of(dense_run(physical), 0).as_array()
        state = dense_run(circuit)
        measured = np.array([state.expectation(logicals[b]) for b in ("X", "Y", "Z")])
        report.logical_bloch = (float(measured[0]), float(measured[1]), float(measured[2]))
        if not np.allclose(measured, expected, atol=1e-9):
            report.failures.append(
                f"logical Bloch vector {measured.round(6).tolist()} differs from "
                f"input {expected.round(6).tolist()}"
            )
    return report
