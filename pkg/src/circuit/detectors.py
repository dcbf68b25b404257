"""Detector error models: which detectors and logical observables each error flips.

``instrument`` pushes every noise site of a circuit through the remaining
Clifford layers as a Pauli frame (all sites at once, one column each), reads
off the measurement flips and folds them into detector and observable
parities. Mechanisms with identical effects are merged.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from src.circuit.ir import Circuit
from src.circuit.noise import NoiseModel, NoiseSite, noise_sites
from src.exceptions import CircuitError, CircuitFormatError
from src.pauli.gates import GateKind, gate_spec

logger = logging.getLogger(__name__)

__all__ = [
    "DetectorModel",
    "combine_probabilities",
    "instrument",
    "measurement_flips",
    "parity_matrices",
]

_SWAP_XZ = {"H", "SQRT_Y", "SQRT_Y_DAG"}
_PHASE_LIKE = {"S", "S_DAG"}
_SQRT_X_LIKE = {"SQRT_X", "SQRT_X_DAG"}
_FRAME_IDENTITY = {"I", "X", "Y", "Z", "MAGIC", "MAGIC_DAG", "RZ"}


def combine_probabilities(p: float, q: float) -> float:
    """Probability that exactly one of two independent mechanisms fires."""

    return p * (1 - q) + q * (1 - p)


# ---------------------------------------------------------------------------
# Model container
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class DetectorModel:
    """Sparse ``(k x m)`` detector matrix, ``(l x m)`` logical matrix and ``m`` probabilities."""

    check: sparse.csc_array
    logicals: sparse.csc_array
    probabilities: np.ndarray
    provenance: list[str] = field(default_factory=list)
    detector_labels: list[str] = field(default_factory=list)
    observable_labels: list[str] = field(default_factory=list)
    dropped_detectors: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.check.shape[1] != self.logicals.shape[1]:
            raise CircuitError("Detector and logical matrices need the same mechanism count")
        if self.probabilities.shape != (self.check.shape[1],):
            raise CircuitError("One probability per mechanism is required")
        if np.any((self.probabilities <= 0) | (self.probabilities >= 0.5)):
            raise CircuitError("Mechanism probabilities must lie in (0, 0.5)")

    @classmethod
    def from_dense(
        cls,
        check: np.ndarray,
        logicals: np.ndarray,
        probabilities: Sequence[float] | np.ndarray,
        provenance: Sequence[str] | None = None,
        **labels: list[str],
    ) -> DetectorModel:
        p = np.asarray(probabilities, dtype=float)
        return cls(
            sparse.csc_array(np.asarray(check, dtype=np.uint8)),
            sparse.csc_array(np.asarray(logicals, dtype=np.uint8)),
            p,
            list(provenance) if provenance is not None else [f"m{j}" for j in range(p.size)],
            **labels,
        )

    @property
    def m(self) -> int:
        return int(self.probabilities.size)

    @property
    def n_detectors(self) -> int:
        return int(self.check.shape[0])

    @property
    def n_observables(self) -> int:
        return int(self.logicals.shape[0])

    def check_dense(self) -> np.ndarray:
        return self.check.toarray().astype(np.uint8) & 1

    def logicals_dense(self) -> np.ndarray:
        return self.logicals.toarray().astype(np.uint8) & 1

    def weights(self) -> np.ndarray:
        return np.log((1 - self.probabilities) / self.probabilities)

    def restrict(
        self, detectors: Sequence[int], observables: Sequence[int] | None = None
    ) -> DetectorModel:
        """Keep only the given detector and observable rows, re-merging the mechanisms."""

        obs = list(range(self.n_observables)) if observables is None else list(observables)
        kept = list(detectors)
        dropped = tuple(sorted(set(range(self.n_detectors)) - set(kept)))
        check = self.check_dense()[kept]
        logicals = self.logicals_dense()[obs]
        model = _merge(
            check,
            logicals,
            self.probabilities,
            self.provenance,
            detector_labels=[self.detector_labels[i] for i in kept] if self.detector_labels else [],
            observable_labels=(
                [self.observable_labels[i] for i in obs] if self.observable_labels else []
            ),
        )
        model.dropped_detectors = tuple(sorted(set(self.dropped_detectors) | set(dropped)))
        return model

    def detector_means(self) -> np.ndarray:
        """Exact flip probability of every detector, treating mechanisms as independent."""

        means = np.zeros(self.n_detectors)
        check = self.check_dense()
        for j, p in enumerate(self.probabilities):
            rows = check[:, j].astype(bool)
            means[rows] = means[rows] * (1 - p) + (1 - means[rows]) * p
        return means

    # -----------------------------------------------------------------------
    # Text form
    # -----------------------------------------------------------------------

    def dumps(self) -> str:
        lines = [f"detectors {self.n_detectors} observables {self.n_observables}"]
        check = self.check_dense()
        logicals = self.logicals_dense()
        for j in range(self.m):
            targets = [f"D{i}" for i in np.flatnonzero(check[:, j])]
            targets += [f"L{i}" for i in np.flatnonzero(logicals[:, j])]
            line = f"error({float(self.probabilities[j])!r}) " + " ".join(targets)
            if self.provenance:
                line += f" # {self.provenance[j]}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> DetectorModel:
        rows = [line for line in text.splitlines() if line.strip()]
        if not rows or not rows[0].startswith("detectors"):
            raise CircuitFormatError(1, "missing 'detectors k observables l' header")
        header = rows[0].split()
        try:
            k, l = int(header[1]), int(header[3])
        except (IndexError, ValueError):
            raise CircuitFormatError(1, "malformed header") from None
        columns: list[tuple[list[int], list[int]]] = []
        probabilities: list[float] = []
        provenance: list[str] = []
        for number, raw in enumerate(rows[1:], start=2):
            body, _, note = raw.partition("#")
            tokens = body.split()
            if not tokens or not tokens[0].startswith("error(") or not tokens[0].endswith(")"):
                raise CircuitFormatError(number, "expected 'error(p) D.. L..'")
            probabilities.append(float(tokens[0][6:-1]))
            dets = [int(t[1:]) for t in tokens[1:] if t.startswith("D")]
            obs = [int(t[1:]) for t in tokens[1:] if t.startswith("L")]
            if any(i >= k for i in dets) or any(i >= l for i in obs):
                raise CircuitFormatError(number, "target index out of range")
            columns.append((dets, obs))
            provenance.append(note.strip())
        check = np.zeros((k, len(columns)), dtype=np.uint8)
        logicals = np.zeros((l, len(columns)), dtype=np.uint8)
        for j, (dets, obs) in enumerate(columns):
            check[dets, j] = 1
            logicals[obs, j] = 1
        return cls.from_dense(check, logicals, probabilities, provenance)

    def dump(self, path: Path) -> None:
        path.write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> DetectorModel:
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def _merge(
    check: np.ndarray,
    logicals: np.ndarray,
    probabilities: np.ndarray,
    provenance: Sequence[str],
    **labels: list[str],
) -> DetectorModel:
    """Combine mechanisms with identical columns; drop those that flip nothing."""

    stacked = np.vstack([check, logicals]).astype(np.uint8)
    merged: dict[bytes, int] = {}
    order: list[bytes] = []
    columns: list[np.ndarray] = []
    probs: list[float] = []
    sources: list[list[str]] = []
    for j in range(stacked.shape[1]):
        column = stacked[:, j]
        if not column.any():
            continue
        key = np.packbits(column).tobytes()
        slot = merged.get(key)
        if slot is None:
            merged[key] = len(order)
            order.append(key)
            columns.append(column)
            probs.append(float(probabilities[j]))
            sources.append([provenance[j]] if provenance else [])
        else:
            probs[slot] = combine_probabilities(probs[slot], float(probabilities[j]))
            if provenance:
                sources[slot].append(provenance[j])

    k = check.shape[0]
    matrix = (
        np.stack(columns, axis=1) if columns else np.zeros((stacked.shape[0], 0), np.uint8)
    )
    return DetectorModel(
        sparse.csc_array(matrix[:k]),
        sparse.csc_array(matrix[k:]),
        np.asarray(probs, dtype=float),
        provenance=[
            src[0] if len(src) == 1 else f"{src[0]} (+{len(src) - 1} merged)" for src in sources
        ],
        **labels,
    )


# ---------------------------------------------------------------------------
# Frame propagation
# ---------------------------------------------------------------------------


def _apply_gate(name: str, qubits: tuple[int, ...], fx: np.ndarray, fz: np.ndarray) -> None:
    if name in _SWAP_XZ:
        (q,) = qubits
        fx[q], fz[q] = fz[q].copy(), fx[q].copy()
    elif name in _PHASE_LIKE:
        (q,) = qubits
        fz[q] ^= fx[q]
    elif name in _SQRT_X_LIKE:
        (q,) = qubits
        fx[q] ^= fz[q]
    elif name == "CZ":
        a, b = qubits
        fz[a] ^= fx[b]
        fz[b] ^= fx[a]
    elif name == "CNOT":
        c, t = qubits
        fx[t] ^= fx[c]
        fz[c] ^= fz[t]
    elif name not in _FRAME_IDENTITY:
        raise CircuitError(f"No frame rule for gate {name}")


def propagate_frames(
    circuit: Circuit,
    fx: np.ndarray,
    fz: np.ndarray,
    inject: dict[int, list[tuple[tuple[int, ...], str, np.ndarray]]],
) -> np.ndarray:
    """Run frame matrices (qubits x columns) through ``circuit``.

    ``inject`` maps a time slot (``2*layer`` before, ``2*layer + 1`` after) to
    ``(qubits, letters, column_mask)`` entries that are XORed into the frames.
    Returns the measurement-flip matrix (measurements x columns).
    """

    flips: list[np.ndarray] = []

    def apply_injections(slot: int) -> None:
        for qubits, letters, mask in inject.get(slot, ()):
            for qubit, letter in zip(qubits, letters, strict=True):
                if letter in "XY":
                    fx[qubit] ^= mask
                if letter in "ZY":
                    fz[qubit] ^= mask

    for index, layer in enumerate(circuit.layers):
        apply_injections(2 * index)
        for gate in layer.gates:
            spec = gate_spec(gate.name)
            if spec.kind is GateKind.PREPARE:
                fx[gate.qubits[0]] = False
                fz[gate.qubits[0]] = False
            elif spec.kind is GateKind.MEASURE:
                q = gate.qubits[0]
                if spec.basis == "Z":
                    flips.append(fx[q].copy())
                elif spec.basis == "X":
                    flips.append(fz[q].copy())
                else:
                    flips.append(fx[q] ^ fz[q])
            else:
                _apply_gate(gate.name, gate.qubits, fx, fz)
        apply_injections(2 * index + 1)
    width = fx.shape[1]
    return np.array(flips, dtype=bool).reshape(len(flips), width)


def parity_matrices(circuit: Circuit) -> tuple[np.ndarray, np.ndarray]:
    """Record-to-detector and record-to-observable incidence matrices."""

    measured = circuit.measurement_count()
    detectors = np.zeros((len(circuit.detectors), measured), dtype=np.uint8)
    for i, det in enumerate(circuit.detectors):
        for record in det.records:
            detectors[i, record] ^= 1
    observables = np.zeros((len(circuit.observables), measured), dtype=np.uint8)
    for i, obs in enumerate(circuit.observables):
        for record in obs.records:
            observables[i, record] ^= 1
    return detectors, observables


def measurement_flips(circuit: Circuit, sites: Sequence[NoiseSite]) -> np.ndarray:
    """Measurement flips caused by each site on its own (measurements x sites)."""

    m = len(sites)
    fx = np.zeros((circuit.n_qubits, m), dtype=bool)
    fz = np.zeros((circuit.n_qubits, m), dtype=bool)
    inject: dict[int, list[tuple[tuple[int, ...], str, np.ndarray]]] = {}
    for j, site in enumerate(sites):
        mask = np.zeros(m, dtype=bool)
        mask[j] = True
        inject.setdefault(site.slot, []).append((site.qubits, site.letters, mask))
    return propagate_frames(circuit, fx, fz, inject)


def instrument(circuit: Circuit, noise: NoiseModel, *, merge: bool = True) -> DetectorModel:
    """Detector error model of ``circuit`` under ``noise``."""

    sites = noise_sites(circuit, noise)
    det_map, obs_map = parity_matrices(circuit)
    flips = measurement_flips(circuit, sites).astype(np.int64)
    check = ((det_map.astype(np.int64) @ flips) % 2).astype(np.uint8)
    logicals = ((obs_map.astype(np.int64) @ flips) % 2).astype(np.uint8)
    probabilities = np.array([site.probability for site in sites], dtype=float)
    provenance = [site.describe() for site in sites]
    labels = {
        "detector_labels": [det.label for det in circuit.detectors],
        "observable_labels": [obs.label for obs in circuit.observables],
    }
    if merge:
        model = _merge(check, logicals, probabilities, provenance, **labels)
    else:
        nonzero = np.flatnonzero(check.any(axis=0) | logicals.any(axis=0))
        model = DetectorModel(
            sparse.csc_array(check[:, nonzero]),
            sparse.csc_array(logicals[:, nonzero]),
            probabilities[nonzero],
            provenance=[provenance[j] for j in nonzero],
            **labels,
        )
    logger.info(
        "Instrumented circuit: %d sites -> %d mechanisms over %d detectors and %d observables",
        len(sites),
        model.m,
        model.n_detectors,
        model.n_observables,
    )
    return model
