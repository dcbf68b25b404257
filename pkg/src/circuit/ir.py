"""Layered circuit representation shared by simulators, noise instrumentation and factories.

A circuit is a list of layers; a layer is a set of gates touching disjoint
qubits. Layers carry a ``tag`` (``prep``, ``input``, ``encode``, ``distill``,
``basis``, ``measure``) and a ``move`` flag marking an atom-move window before
the layer. Measurements are numbered in the order :meth:`Circuit.operations`
yields them; detectors and observables refer to those record indices.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

from src.exceptions import CircuitError, LayerConflictError, QubitRangeError
from src.pauli.gates import GateKind, gate_spec, inverse_gate

logger = logging.getLogger(__name__)

__all__ = ["Circuit", "Detector", "Gate", "Layer", "Observable"]


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        spec = gate_spec(self.name)
        if len(self.qubits) != spec.arity:
            raise CircuitError(f"Gate {self.name} expects {spec.arity} qubits, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"Gate {self.name} targets must be distinct: {self.qubits}")
        if spec.parametric and self.angle is None:
            raise CircuitError(f"Gate {self.name} needs an angle")

    @property
    def kind(self) -> GateKind:
        return gate_spec(self.name).kind

    def remapped(self, mapping: Sequence[int]) -> Gate:
        return Gate(self.name, tuple(mapping[q] for q in self.qubits), self.angle)


@dataclass
class Layer:
    gates: list[Gate] = field(default_factory=list)
    move: bool = False
    tag: str = ""

    def qubits(self) -> set[int]:
        return {q for gate in self.gates for q in gate.qubits}

    def names(self) -> set[str]:
        return {gate.name for gate in self.gates}

    def is_entangling(self) -> bool:
        return any(gate_spec(gate.name).arity == 2 for gate in self.gates)


@dataclass(frozen=True)
class Detector:
    """Parity of measurement-record bits that is ``offset`` in the noiseless circuit."""

    records: tuple[int, ...]
    offset: int = 0
    label: str = ""


@dataclass(frozen=True)
class Observable:
    records: tuple[int, ...]
    offset: int = 0
    label: str = ""


@dataclass
class Circuit:
    n_qubits: int
    layers: list[Layer] = field(default_factory=list)
    roles: dict[int, str] = field(default_factory=dict)
    detectors: list[Detector] = field(default_factory=list)
    observables: list[Observable] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.n_qubits <= 0:
            raise CircuitError("A circuit needs at least one qubit")

    # -----------------------------------------------------------------------
    # Construction
    # -----------------------------------------------------------------------

    def add_layer(
        self, gates: Iterable[Gate | tuple], *, move: bool = False, tag: str = ""
    ) -> Layer:
        """Append a layer, rejecting out-of-range qubits and qubits used twice."""

        built: list[Gate] = []
        used: set[int] = set()
        index = len(self.layers)
        for item in gates:
            gate = item if isinstance(item, Gate) else Gate(*item)
            for qubit in gate.qubits:
                if not 0 <= qubit < self.n_qubits:
                    raise QubitRangeError(qubit, self.n_qubits)
                if qubit in used:
                    raise LayerConflictError(index, qubit)
                used.add(qubit)
            built.append(gate)
        layer = Layer(built, move=move, tag=tag)
        self.layers.append(layer)
        return layer

    def add_single(
        self, name: str, qubits: Iterable[int], *, tag: str = "", angle: float | None = None
    ) -> Layer:
        return self.add_layer([Gate(name, (q,), angle) for q in qubits], tag=tag)

    def add_detector(self, records: Iterable[int], offset: int = 0, label: str = "") -> None:
        self.detectors.append(Detector(tuple(records), offset % 2, label))

    def add_observable(self, records: Iterable[int], offset: int = 0, label: str = "") -> None:
        self.observables.append(Observable(tuple(records), offset % 2, label))

    def extend(self, other: Circuit, mapping: Sequence[int] | None = None) -> None:
        """Append the layers of ``other`` with its qubits relabelled through ``mapping``.

        Detectors and observables of ``other`` are shifted past the measurements
        already present here.
        """

        qubit_map = list(mapping) if mapping is not None else list(range(other.n_qubits))
        shift = self.measurement_count()
        for layer in other.layers:
            self.add_layer(
                [gate.remapped(qubit_map) for gate in layer.gates], move=layer.move, tag=layer.tag
            )
        for qubit, role in other.roles.items():
            self.roles[qubit_map[qubit]] = role
        for det in other.detectors:
            self.add_detector((r + shift for r in det.records), det.offset, det.label)
        for obs in other.observables:
            self.add_observable((r + shift for r in obs.records), obs.offset, obs.label)

    # -----------------------------------------------------------------------
    # Views
    # -----------------------------------------------------------------------

    def operations(self) -> Iterator[Gate]:
        for layer in self.layers:
            yield from layer.gates

    def measurements(self) -> list[tuple[int, str]]:
        """``(qubit, basis)`` for every measurement in record order."""

        return [
            (gate.qubits[0], gate_spec(gate.name).basis or "Z")
            for gate in self.operations()
            if gate.kind is GateKind.MEASURE
        ]

    def measurement_count(self) -> int:
        return sum(1 for gate in self.operations() if gate.kind is GateKind.MEASURE)

    def cz_layers(self) -> list[list[tuple[int, int]]]:
        """Qubit pairs of every layer holding two-qubit gates."""

        return [
            [gate.qubits for gate in layer.gates if len(gate.qubits) == 2]  # type: ignore[misc]
            for layer in self.layers
            if layer.is_entangling()
        ]

    def two_qubit_count(self) -> int:
        return sum(len(pairs) for pairs in self.cz_layers())

    def layers_tagged(self, tag: str) -> list[Layer]:
        return [layer for layer in self.layers if layer.tag == tag]

    def qubits_with_role(self, role: str) -> list[int]:
        return sorted(q for q, r in self.roles.items() if r == role)

    def summary(self) -> dict[str, int]:
        return {
            "qubits": self.n_qubits,
            "layers": len(self.layers),
            "entangling_layers": len(self.cz_layers()),
            "two_qubit_gates": self.two_qubit_count(),
            "measurements": self.measurement_count(),
            "detectors": len(self.detectors),
            "observables": len(self.observables),
        }

    # -----------------------------------------------------------------------
    # Transformations
    # -----------------------------------------------------------------------

    def inverse(self) -> Circuit:
        """Unitary inverse; preparations and measurements are not invertible."""

        inverted = Circuit(self.n_qubits, roles=dict(self.roles))
        for layer in reversed(self.layers):
            gates = []
            for gate in layer.gates:
                if gate.kind is not GateKind.UNITARY:
                    raise CircuitError(f"Cannot invert non-unitary gate {gate.name}")
                name, angle = inverse_gate(gate.name, gate.angle)
                gates.append(Gate(name, gate.qubits, angle))
            inverted.add_layer(gates, move=layer.move, tag=layer.tag)
        return inverted

    def without_tag(self, tag: str) -> Circuit:
        trimmed = Circuit(self.n_qubits, roles=dict(self.roles))
        for layer in self.layers:
            if layer.tag != tag:
                trimmed.add_layer(layer.gates, move=layer.move, tag=layer.tag)
        return trimmed

    def validate(self) -> None:
        """Re-check layer legality and the placement of input rotations.

        ``RZ`` may only act on injected qubits and only before the first
        entangling layer.
        """

        seen_entangling = False
        injected = set(self.qubits_with_role("injected"))
        for index, layer in enumerate(self.layers):
            used: set[int] = set()
            for gate in layer.gates:
                for qubit in gate.qubits:
                    if not 0 <= qubit < self.n_qubits:
                        raise QubitRangeError(qubit, self.n_qubits)
                    if qubit in used:
                        raise LayerConflictError(index, qubit)
                    used.add(qubit)
                if gate.name == "RZ":
                    if seen_entangling:
                        raise CircuitError(f"RZ in layer {index} follows an entangling layer")
                    if gate.qubits[0] not in injected:
                        raise CircuitError(f"RZ in layer {index} acts on non-injected qubit")
            seen_entangling = seen_entangling or layer.is_entangling()
        measured = self.measurement_count()
        for det in (*self.detectors, *self.observables):
            if any(not 0 <= r < measured for r in det.records):
                raise CircuitError(f"Annotation {det.label!r} references a missing measurement")
