"""Direct Pauli-frame simulation, the independent cross-check for detector-model sampling.

Errors are pushed through the circuit by Pauli conjugation gate by gate
(:func:`src.pauli.gates.conjugate`), not by the frame-matrix rules that
:func:`src.circuit.detectors.instrument` uses. Cost grows with sites times
gates, so this is meant for small circuits.
"""

from __future__ import annotations

import logging

import numpy as np

from src.circuit.detectors import parity_matrices
from src.circuit.ir import Circuit
from src.circuit.noise import NoiseModel, NoiseSite, noise_sites
from src.circuit.sampler import SHARD_SHOTS, ShotBatch
from src.exceptions import CircuitError, NonCliffordGateError
from src.pauli.gates import GateKind, conjugate, gate_spec
from src.pauli.pauli import PauliString, commutes

logger = logging.getLogger(__name__)

__all__ = ["frame_sample", "propagate_single_error"]

_MEASURED_LETTER = {"X": "X", "Y": "Y", "Z": "Z"}


def _frame_shard(
    det_flips: np.ndarray,
    obs_flips: np.ndarray,
    probabilities: np.ndarray,
    shots: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    detectors = np.zeros((shots, det_flips.shape[0]), dtype=np.uint8)
    observables = np.zeros((shots, obs_flips.shape[0]), dtype=np.uint8)
    for j, p in enumerate(probabilities):
        fired = rng.random(shots) < p
        detectors[fired] ^= det_flips[:, j]
        observables[fired] ^= obs_flips[:, j]
    return detectors, observables


def frame_sample(circuit: Circuit, noise: NoiseModel, shots: int, seed: int) -> ShotBatch:
    """Sample detector and observable flips with every noise site firing independently.

    Each site's effect is found by conjugating its Pauli through the circuit;
    a shot XORs the effects of the sites that fired.
    """

    if shots < 1:
        raise CircuitError("shots must be at least 1")
    sites = noise_sites(circuit, noise)
    det_map, obs_map = parity_matrices(circuit)
    records = np.array(
        [_measurement_record(circuit, site) for site in sites], dtype=np.int64
    ).reshape(len(sites), circuit.measurement_count())
    det_flips = ((det_map.astype(np.int64) @ records.T) % 2).astype(np.uint8)
    obs_flips = ((obs_map.astype(np.int64) @ records.T) % 2).astype(np.uint8)
    probabilities = np.array([site.probability for site in sites], dtype=float)
    sizes = [SHARD_SHOTS] * (shots // SHARD_SHOTS)
    if shots % SHARD_SHOTS:
        sizes.append(shots % SHARD_SHOTS)
    batches = []
    for size, child in zip(sizes, np.random.SeedSequence(seed).spawn(len(sizes)), strict=True):
        detectors, observables = _frame_shard(
            det_flips, obs_flips, probabilities, size, np.random.default_rng(child)
        )
        batches.append(ShotBatch(detectors, observables))
    logger.debug("Frame-sampled %d shots over %d sites", shots, len(sites))
    return ShotBatch.concatenate(batches)


def _measurement_record(circuit: Circuit, site: NoiseSite) -> list[int]:
    """Measurement flips caused by one site, by Pauli conjugation gate by gate."""

    n = circuit.n_qubits
    error: PauliString | None = None
    flips: list[int] = []

    def insert() -> PauliString:
        x_bits = np.zeros(n, dtype=np.uint8)
        z_bits = np.zeros(n, dtype=np.uint8)
        for qubit, letter in zip(site.qubits, site.letters, strict=True):
            x_bits[qubit] = letter in "XY"
            z_bits[qubit] = letter in "ZY"
        return PauliString.from_bits(x_bits, z_bits)

    for index, layer in enumerate(circuit.layers):
        if site.slot == 2 * index:
            error = insert()
        for gate in layer.gates:
            spec = gate_spec(gate.name)
            if spec.kind is GateKind.MEASURE:
                if error is None:
                    flips.append(0)
                    continue
                measured = PauliString.from_support(
                    n, gate.qubits, _MEASURED_LETTER[spec.basis or "Z"]
                )
                flips.append(0 if commutes(error, measured) else 1)
            elif error is None:
                continue
            elif spec.kind is GateKind.PREPARE:
                x_bits = error.x_bits.copy()
                z_bits = error.z_bits.copy()
                x_bits[gate.qubits[0]] = 0
                z_bits[gate.qubits[0]] = 0
                error = PauliString.from_bits(x_bits, z_bits)
            elif spec.clifford:
                error = conjugate(error, gate.name, gate.qubits, gate.angle)
            elif gate.name == "RZ" or error.weight == 0:
                continue
            else:
                touched = any(error.letter(q) != "I" for q in gate.qubits)
                if touched:
                    raise NonCliffordGateError(gate.name)
        if site.slot == 2 * index + 1:
            error = insert()

    return flips


def propagate_single_error(circuit: Circuit, site: NoiseSite) -> tuple[np.ndarray, np.ndarray]:
    """Detector and observable flips of one site, by Pauli conjugation gate by gate."""

    det_map, obs_map = parity_matrices(circuit)
    record = np.array(_measurement_record(circuit, site), dtype=np.int64)
    return (det_map.astype(np.int64) @ record) % 2, (obs_map.astype(np.int64) @ record) % 2
