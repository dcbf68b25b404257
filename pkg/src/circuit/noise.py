"""Pauli noise model and the list of error locations it induces on a circuit."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.circuit.ir import Circuit, Layer
from src.exceptions import ConfigurationError
from src.pauli.gates import GateKind, gate_spec

logger = logging.getLogger(__name__)

__all__ = ["NoiseModel", "NoiseSite", "noise_sites"]

_TWO_QUBIT_PAULIS = [a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II"]
_DEPHASING = ("ZI", "IZ", "ZZ")
_MEASUREMENT_FLIP = {"Z": "X", "X": "Z", "Y": "X"}


class NoiseModel(BaseModel):
    """Circuit-level Pauli noise; every rate is multiplied by ``rescale``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    p_cz: float = 0.0058
    bias_zz: float = 0.6
    p_1q_global: float = 2.2e-4
    p_1q_local: float = 1.9e-3
    p_prep: float = 0.005
    p_meas: float = 0.005
    p_move_z: float = 2e-4
    p_idle: float = 1e-4
    rescale: float = 1.0

    @field_validator(
        "p_cz", "p_1q_global", "p_1q_local", "p_prep", "p_meas", "p_move_z", "p_idle"
    )
    @classmethod
    def validate_probability(cls, v: float) -> float:
        if not 0 <= v < 0.5:
            raise ValueError(f"Error rates must lie in [0, 0.5), got {v}")
        return v

    @field_validator("bias_zz")
    @classmethod
    def validate_bias(cls, v: float) -> float:
        if not 0 <= v <= 1:
            raise ValueError(f"bias_zz must lie in [0, 1], got {v}")
        return v

    @field_validator("rescale")
    @classmethod
    def validate_rescale(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("rescale must be greater than 0")
        return v

    @model_validator(mode="after")
    def validate_scaled(self) -> NoiseModel:
        worst = max(self.rates())
        if worst * self.rescale >= 0.5:
            raise ValueError("Rescaled error rates must stay below 0.5")
        return self

    # -----------------------------------------------------------------------
    # Presets
    # -----------------------------------------------------------------------

    @classmethod
    def preset(cls, name: str, rescale: float | None = None) -> NoiseModel:
        """``baseline`` (default rates), ``matched`` (rates scaled by 1.25) or ``noiseless``."""

        if name == "baseline":
            base = cls()
        elif name == "matched":
            base = cls(rescale=1.25)
        elif name == "noiseless":
            base = cls(
                p_cz=0, p_1q_global=0, p_1q_local=0, p_prep=0, p_meas=0, p_move_z=0, p_idle=0
            )
        else:
            raise ConfigurationError(f"Unknown noise preset {name!r}")
        if rescale is not None:
            base = base.scaled(rescale)
        return base

    def scaled(self, factor: float) -> NoiseModel:
        return self.model_validate({**self.model_dump(), "rescale": self.rescale * factor})

    def rates(self) -> tuple[float, ...]:
        return (
            self.p_cz,
            self.p_1q_global,
            self.p_1q_local,
            self.p_prep,
            self.p_meas,
            self.p_move_z,
            self.p_idle,
        )

    def is_noiseless(self) -> bool:
        return all(rate == 0 for rate in self.rates())

    def cz_terms(self) -> list[tuple[str, float]]:
        p = self.p_cz * self.rescale
        terms = []
        for pauli in _TWO_QUBIT_PAULIS:
            share = self.bias_zz / 3 if pauli in _DEPHASING else (1 - self.bias_zz) / 12
            terms.append((pauli, p * share))
        return terms


@dataclass(frozen=True)
class NoiseSite:
    """A single Pauli error that fires with ``probability``.

    It acts just before layer ``layer`` (``after=False``) or just after it.
    """

    layer: int
    after: bool
    qubits: tuple[int, ...]
    letters: str
    probability: float
    source: str

    @property
    def slot(self) -> int:
        return 2 * self.layer + int(self.after)

    def describe(self) -> str:
        where = "after" if self.after else "before"
        pairs = zip(self.letters, self.qubits, strict=True)
        targets = ",".join(f"{letter}{q}" for letter, q in pairs)
        return f"{self.source}:{where}:L{self.layer}:{targets}"


def _one_qubit_rate(layer: Layer, n_qubits: int, noise: NoiseModel) -> float:
    """Global-drive rate when one gate acts on every qubit, otherwise the local rate."""

    if len(layer.gates) == n_qubits and len(layer.names()) == 1:
        return noise.p_1q_global * noise.rescale
    return noise.p_1q_local * noise.rescale


def noise_sites(circuit: Circuit, noise: NoiseModel) -> list[NoiseSite]:
    """Every independent error location of ``circuit`` under ``noise``, in time order.

    Layers tagged ``input`` are error-free; the preparation flip of injected
    qubits is applied right after the input segment instead of after ``PREP_Z``.
    """

    sites: list[NoiseSite] = []
    injected = set(circuit.qubits_with_role("injected"))
    input_layers = [i for i, layer in enumerate(circuit.layers) if layer.tag == "input"]
    scale = noise.rescale

    def add(
        layer: int, after: bool, qubits: tuple[int, ...], letters: str, p: float, src: str
    ) -> None:
        if p > 0:
            sites.append(NoiseSite(layer, after, qubits, letters, p, src))

    deferred_prep: list[int] = []
    for index, layer in enumerate(circuit.layers):
        if layer.tag == "input":
            if index == input_layers[-1]:
                for qubit in deferred_prep:
                    add(index, True, (qubit,), "X", noise.p_prep * scale, "prep")
                deferred_prep = []
            continue

        if layer.move:
            movers = sorted(q for gate in layer.gates if len(gate.qubits) == 2 for q in gate.qubits)
            for qubit in movers:
                add(index, False, (qubit,), "Z", noise.p_move_z * scale, "move")
            for qubit in range(circuit.n_qubits):
                add(index, False, (qubit,), "Z", noise.p_idle * scale, "idle")

        rate_1q = _one_qubit_rate(layer, circuit.n_qubits, noise)
        for gate in layer.gates:
            spec = gate_spec(gate.name)
            if spec.kind is GateKind.PREPARE:
                qubit = gate.qubits[0]
                if qubit in injected and input_layers and input_layers[-1] > index:
                    deferred_prep.append(qubit)
                else:
                    add(index, True, gate.qubits, "X", noise.p_prep * scale, "prep")
            elif spec.kind is GateKind.MEASURE:
                letter = _MEASUREMENT_FLIP[spec.basis or "Z"]
                add(index, False, gate.qubits, letter, noise.p_meas * scale, "meas")
            elif spec.arity == 2:
                for pauli, p in noise.cz_terms():
                    pairs = zip(gate.qubits, pauli, strict=True)
                    qubits = tuple(q for q, letter in pairs if letter != "I")
                    add(index, True, qubits, pauli.replace("I", ""), p, gate.name.lower())
            elif spec.clifford and gate.name != "I":
                for letter in "XYZ":
                    add(index, True, gate.qubits, letter, rate_1q / 3, "1q")
    logger.debug("Circuit with %d layers has %d noise sites", len(circuit.layers), len(sites))
    return sites
