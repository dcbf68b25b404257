"""Injection blocks and the 5-to-1 distillation factory built from them.

The factory prepares five encoded inputs, runs the distillation circuit
transversally (each logical gate becomes one physical gate per block
position) and reads every block out transversally: block 0 in the requested
output basis, blocks 1 to 4 in Z. Detector order is blocks 1..4 then block 0;
observable 0 is the output logical and observables 1..4 the syndrome logicals.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from src.circuit.ir import Circuit, Gate
from src.codes.css import CssCode, measurement_spec
from src.exceptions import CircuitError
from src.synth.encoder import synthesize_injection

logger = logging.getLogger(__name__)

__all__ = [
    "ACCEPT_PATTERN",
    "BLOCKS",
    "OUTPUT_BLOCK",
    "SYNDROME_BLOCKS",
    "add_transversal_readout",
    "build_factory_circuit",
    "build_injection_block",
    "distillation_circuit",
    "transversal_gate",
]

BLOCKS = 5
OUTPUT_BLOCK = 0
SYNDROME_BLOCKS = (1, 2, 3, 4)
# Outcome of logical qubits 1..4 (bit 1 = eigenvalue -1) that accepts a run.
ACCEPT_PATTERN = (1, 0, 1, 1)

_BASES = ("X", "Y", "Z")
_MEASURE_GATE = {"X": "M_X", "Y": "M_Y", "Z": "M_Z"}
_DAGGERED = {"S": "S_DAG", "S_DAG": "S", "SQRT_X": "SQRT_X_DAG", "SQRT_X_DAG": "SQRT_X"}
_TRANSVERSAL_AS_IS = {"I", "X", "Y", "Z", "H", "SQRT_Y", "SQRT_Y_DAG", "CZ"}


def distillation_circuit(*, measure: bool = False, output_basis: str = "Z") -> Circuit:
    """Five-qubit logical circuit; qubit 0 carries the output, qubits 1-4 the syndrome."""

    circuit = Circuit(5)
    circuit.add_layer([Gate("S_DAG", (1,)), Gate("SQRT_X", (4,))], tag="distill")
    circuit.add_layer([Gate("CZ", (1, 2)), Gate("CZ", (3, 4))], move=True, tag="distill")
    circuit.add_single("SQRT_Y_DAG", (1, 2), tag="distill")
    circuit.add_single("S_DAG", (1, 2), tag="distill")
    circuit.add_layer([Gate("CZ", (0, 2)), Gate("CZ", (1, 4))], move=True, tag="distill")
    circuit.add_single("H", (0,), tag="distill")
    circuit.add_layer([Gate("CZ", (0, 1)), Gate("CZ", (2, 3))], move=True, tag="distill")
    circuit.add_layer(
        [
            Gate("SQRT_Y_DAG", (1,)),
            Gate("SQRT_Y_DAG", (2,)),
            Gate("SQRT_Y", (3,)),
            Gate("SQRT_Y", (4,)),
        ],
        tag="distill",
    )
    if measure:
        if output_basis not in _BASES:
            raise CircuitError(f"Unknown output basis {output_basis!r}")
        gates = [Gate(_MEASURE_GATE[output_basis], (0,))]
        gates += [Gate("M_Z", (q,)) for q in SYNDROME_BLOCKS]
        circuit.add_layer(gates, tag="measure")
    return circuit


def transversal_gate(name: str, code: CssCode) -> str:
    """Physical gate implementing logical ``name`` when applied on every qubit of a block.

    Phase-type gates pick up a conjugation when the logical support has size
    3 mod 4, because the product of physical ``Y`` then reads ``-Y`` logically.
    """

    if name in _TRANSVERSAL_AS_IS:
        return name
    if name in _DAGGERED:
        weight = len(code.logical_z_support())
        return _DAGGERED[name] if weight % 4 == 3 else name
    raise CircuitError(f"Gate {name} has no transversal implementation here")


def _transversal_layer(gates: Sequence[Gate], code: CssCode) -> list[Gate]:
    n = code.n
    physical: list[Gate] = []
    for gate in gates:
        name = transversal_gate(gate.name, code)
        for q in range(n):
            physical.append(Gate(name, tuple(block * n + q for block in gate.qubits)))
    return physical


def add_transversal_readout(
    circuit: Circuit, code: CssCode, bases: Sequence[str], *, offset_block: int = 0
) -> None:
    """Measure block ``b`` transversally in ``bases[b]`` and annotate detectors and logicals.

    Detectors are emitted for the blocks after the first, then the first block;
    a single block gets its own detectors only.
    """

    n = code.n
    gates: list[Gate] = []
    for block, basis in enumerate(bases):
        if basis not in _BASES:
            raise CircuitError(f"Unknown measurement basis {basis!r}")
        gates.extend(Gate(_MEASURE_GATE[basis], (block * n + q,)) for q in range(n))
    first = circuit.measurement_count()
    circuit.add_layer(gates, tag="measure")

    order = list(range(1, len(bases))) + [0]
    for block in order:
        spec = measurement_spec(code, bases[block])
        for index, support, offset in zip(
            spec.detector_checks, spec.detector_supports, spec.detector_offsets, strict=True
        ):
            circuit.add_detector(
                (first + block * n + q for q in support),
                offset,
                f"block{block + offset_block}:{spec.basis}{index}",
            )
    for block, basis in enumerate(bases):
        spec = measurement_spec(code, basis)
        circuit.add_observable(
            (first + block * n + q for q in spec.logical),
            spec.logical_offset,
            f"block{block + offset_block}:L{spec.basis}",
        )


def build_injection_block(
    code: CssCode,
    angle: float | None = None,
    *,
    injected: str = "magic",
    basis: str | None = None,
    source: str = "published",
) -> Circuit:
    """Encoder for one block; with ``basis`` it also gets a transversal readout."""

    circuit, _ = synthesize_injection(code, source=source, injected=injected, angle=angle)
    if basis is not None:
        add_transversal_readout(circuit, code, [basis])
    return circuit


def build_factory_circuit(
    code: CssCode,
    angles: Sequence[float] | None = None,
    output_basis: str = "Z",
    *,
    source: str = "published",
    input_fragment: Circuit | None = None,
) -> Circuit:
    """Full ``5n``-qubit factory circuit.

    Inputs are magic states, each followed by ``RZ(angles[b])`` when the angle
    is nonzero, unless ``input_fragment`` (a noiseless five-qubit circuit acting
    on the injected qubits) replaces them.
    """

    if output_basis not in _BASES:
        raise CircuitError(f"Unknown output basis {output_basis!r}")
    angles = list(angles) if angles is not None else [0.0] * BLOCKS
    if len(angles) != BLOCKS:
        raise CircuitError(f"Expected {BLOCKS} input angles, got {len(angles)}")
    if input_fragment is not None and input_fragment.n_qubits != BLOCKS:
        raise CircuitError("Input fragment must act on exactly five qubits")

    n = code.n
    encoder, result = synthesize_injection(code, source=source, injected="zero")
    psi = result.injected_row
    injected = [block * n + psi for block in range(BLOCKS)]

    circuit = Circuit(BLOCKS * n)
    circuit.roles = {q: "data" for q in range(BLOCKS * n)}
    for qubit in injected:
        circuit.roles[qubit] = "injected"
    circuit.add_single("PREP_Z", range(BLOCKS * n), tag="prep")

    if input_fragment is None:
        circuit.add_single("MAGIC", injected, tag="input")
        rotations = [
            Gate("RZ", (qubit,), float(angle))
            for qubit, angle in zip(injected, angles, strict=True)
            if angle
        ]
        if rotations:
            circuit.add_layer(rotations, tag="input")
    else:
        for layer in input_fragment.layers:
            if any(gate.name.startswith("M_") for gate in layer.gates):
                raise CircuitError("Input fragment must not measure")
            circuit.add_layer([gate.remapped(injected) for gate in layer.gates], tag="input")

    for layer in encoder.layers:
        if layer.tag != "encode":
            continue
        gates = [
            gate.remapped([block * n + q for q in range(n)])
            for block in range(BLOCKS)
            for gate in layer.gates
        ]
        circuit.add_layer(gates, move=layer.move, tag="encode")

    for layer in distillation_circuit().layers:
        circuit.add_layer(_transversal_layer(layer.gates, code), move=layer.move, tag="distill")

    add_transversal_readout(circuit, code, [output_basis, "Z", "Z", "Z", "Z"])
    circuit.validate()
    logger.debug(
        "Built %d-qubit factory for %s (%s output)", circuit.n_qubits, code.label, output_basis
    )
    return circuit
