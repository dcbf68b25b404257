"""Aaronson-Gottesman stabilizer tableau simulation.

Rows ``0..n-1`` hold destabilizers, rows ``n..2n-1`` stabilizers and row
``2n`` is scratch space for deterministic measurements. A row ``(x, z, r)``
stands for ``(-1)**r`` times the letter-form Pauli with ``Y`` for ``x = z = 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from src.exceptions import CircuitError, NonCliffordGateError, PauliError, QubitRangeError
from src.pauli.gates import GateKind, gate_spec
from src.pauli.pauli import PauliString

if TYPE_CHECKING:
    from src.circuit.ir import Circuit

logger = logging.getLogger(__name__)

__all__ = ["StabilizerTableau", "TableauRun", "tableau_run"]


def _g(x1: np.ndarray, z1: np.ndarray, x2: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Exponent of ``i`` picked up when multiplying single-qubit letters elementwise."""

    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    both = (x1 == 1) & (z1 == 1)
    only_x = (x1 == 1) & (z1 == 0)
    only_z = (x1 == 0) & (z1 == 1)
    return np.where(
        both, z2 - x2, np.where(only_x, z2 * (2 * x2 - 1), np.where(only_z, x2 * (1 - 2 * z2), 0))
    )


class StabilizerTableau:
    """Mutable tableau for ``n`` qubits, initialised to ``|0...0>``."""

    def __init__(self, n: int) -> None:
        if n <= 0:
            raise CircuitError("A tableau needs at least one qubit")
        self.n = n
        self.x = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.z = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.r = np.zeros(2 * n + 1, dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = 1
        self.z[n + idx, idx] = 1

    def copy(self) -> StabilizerTableau:
        clone = StabilizerTableau.__new__(StabilizerTableau)
        clone.n = self.n
        clone.x = self.x.copy()
        clone.z = self.z.copy()
        clone.r = self.r.copy()
        return clone

    def _check(self, *qubits: int) -> None:
        for qubit in qubits:
            if not 0 <= qubit < self.n:
                raise QubitRangeError(qubit, self.n)

    # -----------------------------------------------------------------------
    # Primitive gates
    # -----------------------------------------------------------------------

    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, a: int, b: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def pauli_x(self, a: int) -> None:
        self.r ^= self.z[:, a]

    def pauli_z(self, a: int) -> None:
        self.r ^= self.x[:, a]

    def apply(self, name: str, qubits: tuple[int, ...], angle: float | None = None) -> None:
        """Apply a named unitary Clifford gate."""

        self._check(*qubits)
        match name:
            case "I":
                pass
            case "X":
                self.pauli_x(qubits[0])
            case "Z":
                self.pauli_z(qubits[0])
            case "Y":
                self.pauli_x(qubits[0])
                self.pauli_z(qubits[0])
            case "H":
                self.h(qubits[0])
            case "S":
                self.s(qubits[0])
            case "S_DAG":
                self.s(qubits[0])
                self.pauli_z(qubits[0])
            case "SQRT_X":
                self.h(qubits[0])
                self.s(qubits[0])
                self.h(qubits[0])
            case "SQRT_X_DAG":
                self.h(qubits[0])
                self.s(qubits[0])
                self.pauli_z(qubits[0])
                self.h(qubits[0])
            case "SQRT_Y":
                self.h(qubits[0])
                self.pauli_x(qubits[0])
            case "SQRT_Y_DAG":
                self.h(qubits[0])
                self.pauli_z(qubits[0])
            case "CNOT":
                self.cnot(qubits[0], qubits[1])
            case "CZ":
                self.h(qubits[1])
                self.cnot(qubits[0], qubits[1])
                self.h(qubits[1])
            case "RZ" if not angle:
                pass
            case _:
                raise NonCliffordGateError(name)

    # -----------------------------------------------------------------------
    # Measurement
    # -----------------------------------------------------------------------

    def _rowsum(self, h: int, i: int) -> None:
        total = 2 * int(self.r[h]) + 2 * int(self.r[i])
        total += int(_g(self.x[i], self.z[i], self.x[h], self.z[h]).sum())
        self.r[h] = 0 if total % 4 == 0 else 1
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure_z(self, a: int, rng: np.random.Generator) -> tuple[int, bool]:
        """Measure ``Z_a``; returns ``(bit, deterministic)`` with bit 1 for outcome -1."""

        self._check(a)
        n = self.n
        candidates = np.nonzero(self.x[n : 2 * n, a])[0]
        if candidates.size:
            p = n + int(candidates[0])
            for i in np.nonzero(self.x[: 2 * n, a])[0]:
                if i != p:
                    self._rowsum(int(i), p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            self.r[p] = int(rng.integers(2))
            return int(self.r[p]), False

        scratch = 2 * n
        self.x[scratch] = 0
        self.z[scratch] = 0
        self.r[scratch] = 0
        for i in np.nonzero(self.x[:n, a])[0]:
            self._rowsum(scratch, int(i) + n)
        return int(self.r[scratch]), True

    def measure(self, basis: str, a: int, rng: np.random.Generator) -> tuple[int, bool]:
        if basis == "Z":
            return self.measure_z(a, rng)
        if basis == "X":
            self.h(a)
            outcome = self.measure_z(a, rng)
            self.h(a)
            return outcome
        if basis == "Y":
            self.apply("S_DAG", (a,))
            self.h(a)
            outcome = self.measure_z(a, rng)
            self.h(a)
            self.s(a)
            return outcome
        raise CircuitError(f"Unknown measurement basis {basis!r}")

    def reset(self, a: int, rng: np.random.Generator) -> None:
        bit, _ = self.measure_z(a, rng)
        if bit:
            self.pauli_x(a)

    # -----------------------------------------------------------------------
    # Inspection
    # -----------------------------------------------------------------------

    def stabilizer(self, i: int) -> PauliString:
        row = self.n + i
        return PauliString.from_bits(self.x[row], self.z[row], 2 * int(self.r[row]))

    def destabilizer(self, i: int) -> PauliString:
        return PauliString.from_bits(self.x[i], self.z[i], 2 * int(self.r[i]))

    def stabilizers(self) -> list[PauliString]:
        return [self.stabilizer(i) for i in range(self.n)]

    def peek(self, pauli: PauliString) -> int:
        """Expectation of a Hermitian Pauli: ``+1``/``-1`` when determined, ``0`` when random."""

        if pauli.n != self.n:
            raise PauliError(f"Expected a {self.n}-qubit Pauli, got {pauli.n}")
        if not pauli.is_hermitian():
            raise PauliError("Only Hermitian Paulis have real expectation values")
        px = pauli.x_bits.astype(np.int64)
        pz = pauli.z_bits.astype(np.int64)
        n = self.n
        stab_anti = (self.x[n : 2 * n].astype(np.int64) @ pz + self.z[n : 2 * n] @ px) % 2
        if stab_anti.any():
            return 0
        destab_anti = (self.x[:n].astype(np.int64) @ pz + self.z[:n] @ px) % 2
        product = PauliString.identity(n)
        for i in np.nonzero(destab_anti)[0]:
            product = product * self.stabilizer(int(i))
        if not (
            np.array_equal(product.x_words, pauli.x_words)
            and np.array_equal(product.z_words, pauli.z_words)
        ):
            raise PauliError("Tableau is inconsistent: stabilizer product does not match")
        relative = (pauli.phase - product.phase) % 4
        if relative == 0:
            return 1
        if relative == 2:
            return -1
        raise PauliError("Stabilizer product differs from the Pauli by an imaginary phase")

    def check_invariants(self) -> bool:
        """Verify the symplectic structure: commuting stabilizers, paired destabilizers."""

        n = self.n
        x = self.x[: 2 * n].astype(np.int64)
        z = self.z[: 2 * n].astype(np.int64)
        symplectic = (x @ z.T + z @ x.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        idx = np.arange(n)
        expected[idx, n + idx] = 1
        expected[n + idx, idx] = 1
        return bool(np.array_equal(symplectic, expected))


@dataclass
class TableauRun:
    tableau: StabilizerTableau
    record: np.ndarray
    deterministic: np.ndarray


def tableau_run(
    circuit: Circuit, seed: int | None = None, tableau: StabilizerTableau | None = None
) -> TableauRun:
    """Simulate a Clifford circuit; the measurement record uses bit 1 for outcome -1."""

    rng = np.random.default_rng(seed)
    state = tableau.copy() if tableau is not None else StabilizerTableau(circuit.n_qubits)
    record: list[int] = []
    deterministic: list[bool] = []
    for gate in circuit.operations():
        spec = gate_spec(gate.name)
        if spec.kind is GateKind.PREPARE:
            state.reset(gate.qubits[0], rng)
        elif spec.kind is GateKind.MEASURE:
            bit, fixed = state.measure(spec.basis or "Z", gate.qubits[0], rng)
            record.append(bit)
            deterministic.append(fixed)
        else:
            state.apply(gate.name, gate.qubits, gate.angle)
    logger.debug("Tableau run finished with %d measurements", len(record))
    return TableauRun(
        tableau=state,
        record=np.array(record, dtype=np.uint8),
        deterministic=np.array(deterministic, dtype=bool),
    )
