"""Gate catalogue: unitaries, Clifford conjugation tables and Pauli conjugation.

Conventions follow the usual stabilizer-simulator ones: ``SQRT_Y`` maps
``X -> -Z`` and ``Z -> X``; ``SQRT_X`` maps ``Z -> -Y``; ``CNOT`` takes its
control first. ``MAGIC`` rotates ``|0>`` by ``arccos(1/sqrt(3))`` about the
``(-1, 1, 0)`` axis, landing on the Bloch direction ``(1, 1, 1)/sqrt(3)``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import cache

import numpy as np

from src.exceptions import CircuitError, NonCliffordGateError, QubitRangeError
from src.pauli.pauli import PauliString, pauli_mul

__all__ = [
    "MAGIC_AXIS",
    "MAGIC_THETA",
    "GateKind",
    "GateSpec",
    "conjugate",
    "conjugate_sequence",
    "gate_matrix",
    "gate_spec",
    "inverse_gate",
]

MAGIC_THETA: float = math.acos(1 / math.sqrt(3))
MAGIC_AXIS: tuple[float, float, float] = (-1 / math.sqrt(2), 1 / math.sqrt(2), 0.0)

_SQ2 = 1 / math.sqrt(2)


class GateKind(str, Enum):
    UNITARY = "unitary"
    PREPARE = "prepare"
    MEASURE = "measure"


@dataclass(frozen=True)
class GateSpec:
    name: str
    arity: int
    kind: GateKind
    clifford: bool
    parametric: bool = False
    basis: str | None = None


_SPECS: dict[str, GateSpec] = {
    spec.name: spec
    for spec in (
        GateSpec("I", 1, GateKind.UNITARY, True),
        GateSpec("X", 1, GateKind.UNITARY, True),
        GateSpec("Y", 1, GateKind.UNITARY, True),
        GateSpec("Z", 1, GateKind.UNITARY, True),
        GateSpec("H", 1, GateKind.UNITARY, True),
        GateSpec("S", 1, GateKind.UNITARY, True),
        GateSpec("S_DAG", 1, GateKind.UNITARY, True),
        GateSpec("SQRT_X", 1, GateKind.UNITARY, True),
        GateSpec("SQRT_X_DAG", 1, GateKind.UNITARY, True),
        GateSpec("SQRT_Y", 1, GateKind.UNITARY, True),
        GateSpec("SQRT_Y_DAG", 1, GateKind.UNITARY, True),
        GateSpec("CZ", 2, GateKind.UNITARY, True),
        GateSpec("CNOT", 2, GateKind.UNITARY, True),
        GateSpec("MAGIC", 1, GateKind.UNITARY, False),
        GateSpec("MAGIC_DAG", 1, GateKind.UNITARY, False),
        GateSpec("RZ", 1, GateKind.UNITARY, False, parametric=True),
        GateSpec("PREP_Z", 1, GateKind.PREPARE, True),
        GateSpec("M_X", 1, GateKind.MEASURE, True, basis="X"),
        GateSpec("M_Y", 1, GateKind.MEASURE, True, basis="Y"),
        GateSpec("M_Z", 1, GateKind.MEASURE, True, basis="Z"),
    )
}

_INVERSES = {
    "S": "S_DAG",
    "S_DAG": "S",
    "SQRT_X": "SQRT_X_DAG",
    "SQRT_X_DAG": "SQRT_X",
    "SQRT_Y": "SQRT_Y_DAG",
    "SQRT_Y_DAG": "SQRT_Y",
    "MAGIC": "MAGIC_DAG",
    "MAGIC_DAG": "MAGIC",
}

# Images of the local generators under U P U^dagger.
_IMAGES: dict[str, dict[str, str]] = {
    "I": {"X": "+X", "Z": "+Z"},
    "X": {"X": "+X", "Z": "-Z"},
    "Y": {"X": "-X", "Z": "-Z"},
    "Z": {"X": "-X", "Z": "+Z"},
    "H": {"X": "+Z", "Z": "+X"},
    "S": {"X": "+Y", "Z": "+Z"},
    "S_DAG": {"X": "-Y", "Z": "+Z"},
    "SQRT_X": {"X": "+X", "Z": "-Y"},
    "SQRT_X_DAG": {"X": "+X", "Z": "+Y"},
    "SQRT_Y": {"X": "-Z", "Z": "+X"},
    "SQRT_Y_DAG": {"X": "+Z", "Z": "-X"},
    "CZ": {"XI": "+XZ", "IX": "+ZX", "ZI": "+ZI", "IZ": "+IZ"},
    "CNOT": {"XI": "+XX", "IX": "+IX", "ZI": "+ZI", "IZ": "+ZZ"},
}


def gate_spec(name: str) -> GateSpec:
    try:
        return _SPECS[name]
    except KeyError:
        raise CircuitError(f"Unknown gate {name!r}") from None


def inverse_gate(name: str, angle: float | None = None) -> tuple[str, float | None]:
    """Return the inverse of a unitary gate as ``(name, angle)``."""

    spec = gate_spec(name)
    if spec.kind is not GateKind.UNITARY:
        raise CircuitError(f"Gate {name} has no unitary inverse")
    if name == "RZ":
        return "RZ", -(angle or 0.0)
    return _INVERSES.get(name, name), angle


def _axis_rotation(theta: float, axis: Sequence[float]) -> np.ndarray:
    nx, ny, nz = axis
    generator = np.array([[nz, nx - 1j * ny], [nx + 1j * ny, -nz]], dtype=complex)
    return math.cos(theta / 2) * np.eye(2, dtype=complex) - 1j * math.sin(theta / 2) * generator


@cache
def _fixed_matrix(name: str) -> np.ndarray:
    if name == "I":
        return np.eye(2, dtype=complex)
    if name == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if name == "Y":
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if name == "Z":
        return np.diag([1, -1]).astype(complex)
    if name == "H":
        return _SQ2 * np.array([[1, 1], [1, -1]], dtype=complex)
    if name == "S":
        return np.diag([1, 1j])
    if name == "S_DAG":
        return np.diag([1, -1j])
    if name == "SQRT_X":
        return _SQ2 * np.array([[1, -1j], [-1j, 1]], dtype=complex)
    if name == "SQRT_X_DAG":
        return _SQ2 * np.array([[1, 1j], [1j, 1]], dtype=complex)
    if name == "SQRT_Y":
        return _SQ2 * np.array([[1, -1], [1, 1]], dtype=complex)
    if name == "SQRT_Y_DAG":
        return _SQ2 * np.array([[1, 1], [-1, 1]], dtype=complex)
    if name == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if name == "CNOT":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    if name == "MAGIC":
        return _axis_rotation(MAGIC_THETA, MAGIC_AXIS)
    if name == "MAGIC_DAG":
        return _axis_rotation(-MAGIC_THETA, MAGIC_AXIS)
    raise CircuitError(f"Gate {name} has no fixed matrix")


def gate_matrix(name: str, angle: float | None = None) -> np.ndarray:
    """Unitary matrix of ``name``; ``RZ(angle) = diag(e^{-i angle/2}, e^{i angle/2})``."""

    spec = gate_spec(name)
    if spec.kind is not GateKind.UNITARY:
        raise CircuitError(f"Gate {name} is not unitary")
    if name == "RZ":
        theta = angle or 0.0
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    return _fixed_matrix(name).copy()


@cache
def _image_strings(name: str) -> dict[tuple[int, str], PauliString]:
    table = _IMAGES[name]
    images: dict[tuple[int, str], PauliString] = {}
    for key, label in table.items():
        if len(key) == 1:
            images[(0, key)] = PauliString.from_label(label)
        else:
            local = 0 if key[0] != "I" else 1
            images[(local, key[local])] = PauliString.from_label(label)
    return images


def _embed(local: PauliString, targets: Sequence[int], n: int) -> PauliString:
    x_bits = np.zeros(n, dtype=np.uint8)
    z_bits = np.zeros(n, dtype=np.uint8)
    x_bits[list(targets)] = local.x_bits
    z_bits[list(targets)] = local.z_bits
    return PauliString.from_bits(x_bits, z_bits, local.phase)


def conjugate(
    p: PauliString, gate: str, targets: Iterable[int], angle: float | None = None
) -> PauliString:
    """Return ``U p U^dagger`` for the Clifford gate ``gate`` acting on ``targets``."""

    spec = gate_spec(gate)
    if gate == "RZ" and not angle:
        return p
    if spec.kind is not GateKind.UNITARY or not spec.clifford:
        raise NonCliffordGateError(gate)
    qubits = tuple(targets)
    if len(qubits) != spec.arity:
        raise CircuitError(f"Gate {gate} expects {spec.arity} targets, got {len(qubits)}")
    if len(set(qubits)) != len(qubits):
        raise CircuitError(f"Gate {gate} targets must be distinct")
    for qubit in qubits:
        if not 0 <= qubit < p.n:
            raise QubitRangeError(qubit, p.n)

    x_bits = p.x_bits.copy()
    z_bits = p.z_bits.copy()
    local_x = [int(x_bits[q]) for q in qubits]
    local_z = [int(z_bits[q]) for q in qubits]

    # Strip the targeted factors, keeping p = i^r * rest * prod_t X_t^x Z_t^z.
    r = p.phase + int(np.sum(x_bits & z_bits))
    x_bits[list(qubits)] = 0
    z_bits[list(qubits)] = 0
    rest_phase = (r - int(np.sum(x_bits & z_bits))) % 4
    result = PauliString.from_bits(x_bits, z_bits, rest_phase)

    images = _image_strings(gate)
    for local, (has_x, has_z) in enumerate(zip(local_x, local_z, strict=True)):
        if has_x:
            result = pauli_mul(result, _embed(images[(local, "X")], qubits, p.n))
        if has_z:
            result = pauli_mul(result, _embed(images[(local, "Z")], qubits, p.n))
    return result


def conjugate_sequence(
    p: PauliString, operations: Iterable[tuple[str, Sequence[int]]]
) -> PauliString:
    """Conjugate through gates applied in time order."""

    for gate, targets in operations:
        p = conjugate(p, gate, targets)
    return p
