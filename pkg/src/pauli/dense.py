"""Small exact state-vector simulator used as the oracle for everything Clifford.

It also carries the only non-Clifford pieces the pipeline needs (the magic
preparation rotation and input ``RZ`` errors). Qubit 0 is the most significant
tensor factor of the amplitude vector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from src.config import config
from src.exceptions import CircuitError, QubitRangeError, SizeOverflowError
from src.pauli.bloch import BlochVector
from src.pauli.gates import GateKind, gate_matrix, gate_spec
from src.pauli.pauli import PauliString

if TYPE_CHECKING:
    from collections.abc import Sequence

    from src.circuit.ir import Circuit

logger = logging.getLogger(__name__)

__all__ = ["DenseState", "apply_matrix", "bloch_of", "dense_run", "measurement_distribution"]

_NORM_TOLERANCE = 1e-10
_BASIS_ROTATION = {"X": ("H",), "Y": ("S_DAG", "H"), "Z": ()}


@dataclass(frozen=True, eq=False)
class DenseState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        limit = config.dense_max_qubits
        if self.n > limit:
            raise SizeOverflowError(self.n, limit)
        if self.amplitudes.shape != (2**self.n,):
            raise CircuitError(f"Expected {2**self.n} amplitudes, got {self.amplitudes.shape}")
        norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm - 1) > _NORM_TOLERANCE:
            raise CircuitError(f"State norm {norm} deviates from 1")

    @classmethod
    def zeros(cls, n: int) -> DenseState:
        limit = config.dense_max_qubits
        if n > limit:
            raise SizeOverflowError(n, limit)
        amplitudes = np.zeros(2**n, dtype=complex)
        amplitudes[0] = 1
        return cls(n, amplitudes)

    @classmethod
    def product(cls, qubit_states: Sequence[np.ndarray]) -> DenseState:
        amplitudes = np.ones(1, dtype=complex)
        for local in qubit_states:
            amplitudes = np.kron(amplitudes, np.asarray(local, dtype=complex))
        return cls(len(qubit_states), amplitudes / np.linalg.norm(amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def expectation(self, pauli: PauliString) -> float:
        if pauli.n != self.n:
            raise CircuitError(f"Expected a {self.n}-qubit Pauli, got {pauli.n}")
        value = np.vdot(self.amplitudes, pauli.to_matrix() @ self.amplitudes)
        return float(value.real)

    def reduced_density(self, qubit: int) -> np.ndarray:
        if not 0 <= qubit < self.n:
            raise QubitRangeError(qubit, self.n)
        local = np.moveaxis(self.tensor(), qubit, 0).reshape(2, -1)
        return local @ local.conj().T


def apply_matrix(
    amplitudes: np.ndarray, n: int, matrix: np.ndarray, qubits: Sequence[int]
) -> np.ndarray:
    """Apply a ``2**k`` unitary to ``qubits`` of an ``n``-qubit amplitude vector."""

    k = len(qubits)
    tensor = amplitudes.reshape((2,) * n)
    op = matrix.reshape((2,) * (2 * k))
    moved = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(moved, list(range(k)), list(qubits)).reshape(-1)


def dense_run(circuit: Circuit, inputs: DenseState | None = None) -> DenseState:
    """Apply every unitary and preparation of ``circuit``; terminal measurements are skipped.

    ``PREP_Z`` is only accepted on qubits that are still in ``|0>``, which is
    how every circuit in this package uses it.
    """

    limit = config.dense_max_qubits
    if circuit.n_qubits > limit:
        raise SizeOverflowError(circuit.n_qubits, limit)
    state = inputs if inputs is not None else DenseState.zeros(circuit.n_qubits)
    if state.n != circuit.n_qubits:
        raise CircuitError(f"Input has {state.n} qubits, circuit has {circuit.n_qubits}")

    amplitudes = state.amplitudes.copy()
    for gate in circuit.operations():
        spec = gate_spec(gate.name)
        if spec.kind is GateKind.MEASURE:
            continue
        if spec.kind is GateKind.PREPARE:
            qubit = gate.qubits[0]
            local = np.moveaxis(amplitudes.reshape((2,) * state.n), qubit, 0)
            if float(np.sum(np.abs(local[1]) ** 2)) > 1e-12:
                raise CircuitError(f"PREP_Z on qubit {qubit} which is not in |0>")
            continue
        amplitudes = apply_matrix(
            amplitudes, state.n, gate_matrix(gate.name, gate.angle), gate.qubits
        )
    return DenseState(state.n, amplitudes)


def measurement_distribution(
    state: DenseState, measurements: Sequence[tuple[int, str]]
) -> np.ndarray:
    """Joint outcome distribution of the listed ``(qubit, basis)`` measurements.

    Entry ``o`` holds the probability of the outcome whose ``i``-th measurement
    reads bit ``(o >> i) & 1`` (bit 1 for eigenvalue -1).
    """

    amplitudes = state.amplitudes.copy()
    for qubit, basis in measurements:
        for name in _BASIS_ROTATION[basis]:
            amplitudes = apply_matrix(amplitudes, state.n, gate_matrix(name), (qubit,))
    probs = (np.abs(amplitudes) ** 2).reshape((2,) * state.n)
    measured = [qubit for qubit, _ in measurements]
    others = tuple(q for q in range(state.n) if q not in measured)
    marginal = probs.sum(axis=others) if others else probs
    # Axes of ``marginal`` follow ascending qubit index; reorder to reversed measurement order.
    remaining = sorted(measured)
    order = [remaining.index(q) for q in reversed(measured)]
    return np.transpose(marginal, order).reshape(-1)


def bloch_of(state: DenseState, qubit: int) -> BlochVector:
    """``(<X>, <Y>, <Z>)`` of the reduced state of ``qubit``."""

    rho = state.reduced_density(qubit)
    x = 2 * rho[0, 1].real
    y = -2 * rho[0, 1].imag
    z = (rho[0, 0] - rho[1, 1]).real
    return BlochVector(float(x), float(y), float(z))
