"""Line-based circuit interchange text.

    # qubits: 7
    # role: 6 injected
    LAYER 0 tag=prep
    PREP_Z 0 1 2 3 4 5 6
    LAYER 4 move tag=encode
    CZ 0 1 3 2 5 4
    RZ(0.25) 6
    DETECTOR 0 1 2 3 offset=0 label=block0:Z0
    OBSERVABLE 0 1 5 offset=0 label=block0:LZ

Two-qubit gate lines list their pairs back to back. Comments other than the
``qubits`` and ``role`` annotations are ignored.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path

from src.circuit.ir import Circuit, Gate
from src.exceptions import CircuitError, CircuitFormatError
from src.pauli.gates import gate_spec

logger = logging.getLogger(__name__)

__all__ = ["dump_circuit", "format_circuit", "load_circuit", "parse_circuit"]

_PARAMETRIC = re.compile(r"^(?P<name>[A-Z_]+)\((?P<angle>[^)]+)\)$")


def _gate_lines(gates: list[Gate]) -> list[str]:
    grouped: dict[tuple[str, float | None], list[int]] = {}
    for gate in gates:
        grouped.setdefault((gate.name, gate.angle), []).extend(gate.qubits)
    lines = []
    for (name, angle), qubits in grouped.items():
        head = f"{name}({angle!r})" if angle is not None else name
        lines.append(" ".join([head, *map(str, qubits)]))
    return lines


def _annotation(keyword: str, records: tuple[int, ...], offset: int, label: str) -> str:
    parts = [keyword, *map(str, records), f"offset={offset}"]
    if label:
        parts.append(f"label={label}")
    return " ".join(parts)


def format_circuit(circuit: Circuit) -> str:
    lines = [f"# qubits: {circuit.n_qubits}"]
    lines += [f"# role: {q} {role}" for q, role in sorted(circuit.roles.items())]
    for index, layer in enumerate(circuit.layers):
        header = [f"LAYER {index}"]
        if layer.move:
            header.append("move")
        if layer.tag:
            header.append(f"tag={layer.tag}")
        lines.append(" ".join(header))
        lines.extend(_gate_lines(layer.gates))
    for det in circuit.detectors:
        lines.append(_annotation("DETECTOR", det.records, det.offset, det.label))
    for obs in circuit.observables:
        lines.append(_annotation("OBSERVABLE", obs.records, obs.offset, obs.label))
    return "\n".join(lines) + "\n"


def _parse_gates(number: int, tokens: list[str]) -> list[Gate]:
    head = tokens[0]
    angle: float | None = None
    match = _PARAMETRIC.match(head)
    if match:
        head = match["name"]
        try:
            angle = float(match["angle"])
        except ValueError:
            raise CircuitFormatError(number, f"bad angle in {tokens[0]!r}") from None
    try:
        arity = gate_spec(head).arity
        qubits = [int(t) for t in tokens[1:]]
    except CircuitError as exc:
        raise CircuitFormatError(number, str(exc)) from None
    except ValueError:
        raise CircuitFormatError(number, "qubit indices must be integers") from None
    if not qubits or len(qubits) % arity:
        raise CircuitFormatError(number, f"{head} needs a multiple of {arity} qubits")
    try:
        return [
            Gate(head, tuple(qubits[i : i + arity]), angle) for i in range(0, len(qubits), arity)
        ]
    except CircuitError as exc:
        raise CircuitFormatError(number, str(exc)) from None


def _parse_annotation(number: int, tokens: list[str]) -> tuple[list[int], int, str]:
    records: list[int] = []
    offset = 0
    label = ""
    for token in tokens[1:]:
        if token.startswith("offset="):
            if not token[7:].isdigit():
                raise CircuitFormatError(number, f"bad offset {token!r}")
            offset = int(token[7:])
        elif token.startswith("label="):
            label = token[6:]
        elif token.isdigit():
            records.append(int(token))
        else:
            raise CircuitFormatError(number, f"unexpected token {token!r}")
    return records, offset, label


def parse_circuit(text: str) -> Circuit:
    n_qubits: int | None = None
    roles: dict[int, str] = {}
    layers: list[tuple[bool, str, list[Gate]]] = []
    detectors: list[tuple[list[int], int, str]] = []
    observables: list[tuple[list[int], int, str]] = []

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("qubits:"):
                n_qubits = int(body[7:])
            elif body.startswith("role:"):
                qubit, _, role = body[5:].strip().partition(" ")
                roles[int(qubit)] = role.strip()
            continue
        tokens = line.split()
        if tokens[0] == "LAYER":
            if len(tokens) < 2 or not tokens[1].isdigit() or int(tokens[1]) != len(layers):
                raise CircuitFormatError(number, f"expected 'LAYER {len(layers)}'")
            move = "move" in tokens[2:]
            tag = next((t[4:] for t in tokens[2:] if t.startswith("tag=")), "")
            layers.append((move, tag, []))
        elif tokens[0] == "DETECTOR":
            detectors.append(_parse_annotation(number, tokens))
        elif tokens[0] == "OBSERVABLE":
            observables.append(_parse_annotation(number, tokens))
        elif not layers:
            raise CircuitFormatError(number, "gate line before the first LAYER header")
        else:
            layers[-1][2].extend(_parse_gates(number, tokens))

    if n_qubits is None:
        raise CircuitFormatError(1, "missing '# qubits: n' annotation")
    circuit = Circuit(n_qubits, roles=roles)
    for move, tag, gates in layers:
        circuit.add_layer(gates, move=move, tag=tag)
    for records, offset, label in detectors:
        circuit.add_detector(records, offset, label)
    for records, offset, label in observables:
        circuit.add_observable(records, offset, label)
    circuit.validate()
    logger.debug("Parsed circuit with %d layers", len(circuit.layers))
    return circuit


def dump_circuit(circuit: Circuit, path: Path) -> None:
    Path(path).write_text(format_circuit(circuit), encoding="utf-8")


def load_circuit(path: Path) -> Circuit:
    return parse_circuit(Path(path).read_text(encoding="utf-8"))
