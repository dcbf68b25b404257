"""Ideal logical channel of the distillation circuit by exact five-qubit simulation.

Outcomes are indexed ``o = sum_i bit_i << i`` where bit 0 is the output qubit
measured in the requested basis and bits 1-4 are the Z outcomes of the
syndrome qubits (bit 1 for eigenvalue -1).
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from src.channel.fidelity import magic_fidelity
from src.circuit.factory import ACCEPT_PATTERN, BLOCKS, distillation_circuit
from src.circuit.ir import Circuit, Gate
from src.circuit.noise import NoiseModel, noise_sites
from src.config import config
from src.exceptions import ChannelError, SizeOverflowError
from src.pauli.bloch import BlochVector
from src.pauli.dense import apply_matrix, dense_run, measurement_distribution
from src.pauli.gates import GateKind, gate_matrix, gate_spec

logger = logging.getLogger(__name__)

__all__ = [
    "ACCEPT_KEY",
    "BASES",
    "OUTCOMES",
    "SYNDROME_MASK",
    "IdealChannel",
    "ideal_channel",
    "ideal_input_circuit",
    "noisy_dense_distribution",
    "outcome_statistics",
]

BASES = ("X", "Y", "Z")
OUTCOMES = 1 << BLOCKS
SYNDROME_MASK = OUTCOMES - 2
ACCEPT_KEY = sum(bit << (i + 1) for i, bit in enumerate(ACCEPT_PATTERN))

_ROTATE_TO_Z = {"X": ("H",), "Y": ("S_DAG", "H"), "Z": ()}


def _check_basis(basis: str) -> str:
    if basis not in BASES:
        raise ChannelError(f"Unknown basis {basis!r}")
    return basis


def outcome_statistics(distribution: np.ndarray) -> tuple[float, float]:
    """Acceptance probability and accepted-output expectation of an outcome distribution.

    The expectation is ``0.0`` when nothing is accepted.
    """

    dist = np.asarray(distribution, dtype=float)
    if dist.shape != (OUTCOMES,):
        raise ChannelError(f"Expected {OUTCOMES} outcome probabilities, got {dist.shape}")
    keep = ACCEPT_KEY
    acceptance = float(dist[keep] + dist[keep | 1])
    if acceptance <= 0:
        return 0.0, 0.0
    return acceptance, float((dist[keep] - dist[keep | 1]) / acceptance)


def ideal_input_circuit(angles: Sequence[float] | None = None) -> Circuit:
    """Magic inputs, optional ``RZ`` errors, then the distillation circuit."""

    angles = list(angles) if angles is not None else [0.0] * BLOCKS
    if len(angles) != BLOCKS:
        raise ChannelError(f"Expected {BLOCKS} input angles, got {len(angles)}")
    circuit = Circuit(BLOCKS)
    circuit.add_single("MAGIC", range(BLOCKS), tag="input")
    rotations = [Gate("RZ", (q,), float(a)) for q, a in enumerate(angles) if a]
    if rotations:
        circuit.add_layer(rotations, tag="input")
    for layer in distillation_circuit().layers:
        circuit.add_layer(layer.gates, move=layer.move, tag=layer.tag)
    return circuit


@dataclass(frozen=True, eq=False)
class IdealChannel:
    """Noise-free outcome distributions for each output basis."""

    angles: tuple[float, ...]
    distributions: dict[str, np.ndarray]

    def distribution(self, basis: str) -> np.ndarray:
        if basis not in self.distributions:
            raise ChannelError(f"Ideal channel has no {basis} distribution")
        return self.distributions[basis]

    @property
    def bases(self) -> tuple[str, ...]:
        return tuple(b for b in BASES if b in self.distributions)

    @property
    def acceptance(self) -> float:
        return outcome_statistics(self.distributions[self.bases[0]])[0]

    def output_component(self, basis: str) -> float:
        return outcome_statistics(self.distribution(basis))[1]

    def output_bloch(self) -> BlochVector:
        return BlochVector(*(self.output_component(b) for b in BASES))

    def output_fidelity(self) -> float:
        return magic_fidelity(self.output_bloch())


def ideal_channel(
    angles: Sequence[float] | None = None, basis: str | Iterable[str] | None = None
) -> IdealChannel:
    """Exact outcome distribution(s) for five magic inputs rotated by ``RZ(angles)``.

    ``basis`` limits the output bases computed; all three by default.
    """

    if basis is None:
        bases: tuple[str, ...] = BASES
    elif isinstance(basis, str):
        bases = (_check_basis(basis),)
    else:
        bases = tuple(_check_basis(b) for b in basis)
    resolved = [float(a) for a in angles] if angles is not None else [0.0] * BLOCKS
    circuit = ideal_input_circuit(resolved)
    state = dense_run(circuit)
    distributions = {}
    for b in bases:
        dist = measurement_distribution(state, [(0, b), *((q, "Z") for q in range(1, BLOCKS))])
        distributions[b] = dist / dist.sum()
    channel = IdealChannel(tuple(resolved), distributions)
    logger.debug(
        "Ideal channel for angles %s: acceptance %.6f", channel.angles, channel.acceptance
    )
    return channel


# ---------------------------------------------------------------------------
# Noisy density-matrix reference
# ---------------------------------------------------------------------------


def _conjugate(rho: np.ndarray, n: int, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """``U rho U^dagger`` with ``rho`` flattened as a ``2n``-qubit vector."""

    rho = apply_matrix(rho, 2 * n, matrix, qubits)
    return apply_matrix(rho, 2 * n, matrix.conj(), [q + n for q in qubits])


def _pauli_matrix(letters: str) -> np.ndarray:
    matrix = np.ones((1, 1), dtype=complex)
    for letter in letters:
        matrix = np.kron(matrix, gate_matrix(letter))
    return matrix


def noisy_dense_distribution(circuit: Circuit, noise: NoiseModel) -> np.ndarray:
    """Exact observable distribution of a small circuit under its Pauli noise sites.

    Entry ``k`` is the probability that observable ``i`` reads ``(k >> i) & 1``.
    The density matrix is evolved exactly; measurements must be terminal.
    """

    n = circuit.n_qubits
    limit = config.dense_max_qubits
    if 2 * n > limit:
        raise SizeOverflowError(2 * n, limit)

    sites: dict[int, list] = {}
    for site in noise_sites(circuit, noise):
        sites.setdefault(site.slot, []).append(site)

    rho = np.zeros(4**n, dtype=complex)
    rho[0] = 1.0

    def apply_sites(slot: int) -> np.ndarray:
        out = rho
        for site in sites.get(slot, []):
            flipped = _conjugate(out, n, _pauli_matrix(site.letters), site.qubits)
            out = (1 - site.probability) * out + site.probability * flipped
        return out

    measured: list[tuple[int, str]] = []
    for index, layer in enumerate(circuit.layers):
        rho = apply_sites(2 * index)
        for gate in layer.gates:
            spec = gate_spec(gate.name)
            if spec.kind is GateKind.MEASURE:
                measured.append((gate.qubits[0], spec.basis or "Z"))
            elif spec.kind is GateKind.UNITARY:
                if any(q in (m for m, _ in measured) for q in gate.qubits):
                    raise ChannelError("Dense reference needs terminal measurements")
                rho = _conjugate(rho, n, gate_matrix(gate.name, gate.angle), gate.qubits)
        rho = apply_sites(2 * index + 1)

    for qubit, basis in measured:
        for name in _ROTATE_TO_Z[basis]:
            rho = _conjugate(rho, n, gate_matrix(name), (qubit,))
    diagonal = np.real(np.diagonal(rho.reshape(2**n, 2**n)))

    # Qubit 0 is the most significant bit of a basis index.
    states = np.arange(2**n)
    records = [(states >> (n - 1 - qubit)) & 1 for qubit, _ in measured]
    keys = np.zeros(2**n, dtype=np.int64)
    for position, obs in enumerate(circuit.observables):
        parity = np.full(2**n, obs.offset, dtype=np.int64)
        for record in obs.records:
            parity ^= records[record]
        keys |= parity << position
    distribution = np.bincount(keys, weights=diagonal, minlength=1 << len(circuit.observables))
    return distribution / distribution.sum()
