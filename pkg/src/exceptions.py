"""Custom exception hierarchy for magic-factory-sim.

All project-specific exceptions inherit from FactoryError so callers can
catch the entire family with a single ``except FactoryError`` clause, or
handle individual error types with more granular clauses.
"""

from __future__ import annotations


class FactoryError(Exception):
    """Base exception for all magic-factory-sim errors."""


# ---------------------------------------------------------------------------
# Configuration errors
# ---------------------------------------------------------------------------


class ConfigurationError(FactoryError):
    """Raised when an experiment or noise configuration is invalid."""


# ---------------------------------------------------------------------------
# Pauli algebra errors
# ---------------------------------------------------------------------------


class PauliError(FactoryError):
    """Raised when a Pauli operator operation is malformed."""


class LengthMismatchError(PauliError):
    """Raised when two Pauli strings of different qubit counts are combined."""

    def __init__(self, left: int, right: int) -> None:
        self.left = left
        self.right = right
        super().__init__(f"Pauli strings act on {left} and {right} qubits")


# ---------------------------------------------------------------------------
# Circuit errors
# ---------------------------------------------------------------------------


class CircuitError(FactoryError):
    """Raised when a circuit is malformed or cannot be simulated."""


class NonCliffordGateError(CircuitError):
    """Raised when a Clifford-only routine meets a non-Clifford gate."""

    def __init__(self, gate: str) -> None:
        self.gate = gate
        super().__init__(f"Gate {gate} is not a Clifford operation")


class SizeOverflowError(CircuitError):
    """Raised when a simulator is asked to hold more qubits than it supports."""

    def __init__(self, n_qubits: int, limit: int) -> None:
        self.n_qubits = n_qubits
        self.limit = limit
        super().__init__(f"{n_qubits} qubits exceeds the supported limit of {limit}")


class LayerConflictError(CircuitError):
    """Raised when a qubit is used twice within one layer."""

    def __init__(self, layer: int, qubit: int) -> None:
        self.layer = layer
        self.qubit = qubit
        super().__init__(f"Qubit {qubit} appears twice in layer {layer}")


class QubitRangeError(CircuitError):
    """Raised when a gate targets a qubit outside the circuit."""

    def __init__(self, qubit: int, n_qubits: int) -> None:
        self.qubit = qubit
        self.n_qubits = n_qubits
        super().__init__(f"Qubit {qubit} is out of range for {n_qubits} qubits")


class CircuitFormatError(CircuitError):
    """Raised when circuit or detector-model text cannot be parsed."""

    def __init__(self, line_number: int, reason: str) -> None:
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


# ---------------------------------------------------------------------------
# Code errors
# ---------------------------------------------------------------------------


class CodeError(FactoryError):
    """Raised when a quantum code definition is invalid or unsupported."""


class UnsupportedDistanceError(CodeError):
    """Raised when a color code of an unsupported distance is requested."""

    def __init__(self, distance: int) -> None:
        self.distance = distance
        super().__init__(f"Color codes are available for distance 1, 3 and 5, not {distance}")


class CodeValidationError(CodeError):
    """Raised when a code violates one of its structural invariants."""

    def __init__(self, invariant: str, detail: str) -> None:
        self.invariant = invariant
        self.detail = detail
        super().__init__(f"{invariant}: {detail}")


# ---------------------------------------------------------------------------
# Synthesis errors
# ---------------------------------------------------------------------------


class SynthesisError(FactoryError):
    """Raised when an encoding circuit cannot be synthesized."""


class BudgetExhaustedError(SynthesisError):
    """Raised when the row-reduction search runs out of nodes or layers."""

    def __init__(self, nodes: int, max_layers: int) -> None:
        self.nodes = nodes
        self.max_layers = max_layers
        super().__init__(
            f"No full reduction found within {nodes} search nodes and {max_layers} layers"
        )


class MalformedMatrixError(SynthesisError):
    """Raised when a reduction matrix is not in the expected final form."""


class InjectionVerificationError(SynthesisError):
    """Raised when an injection circuit does not prepare the expected code state."""


# ---------------------------------------------------------------------------
# Decoding errors
# ---------------------------------------------------------------------------


class DecodingError(FactoryError):
    """Raised when decoding fails."""


class InfeasibleSyndromeError(DecodingError):
    """Raised when no error configuration reproduces the observed syndrome."""

    def __init__(self, syndrome: str) -> None:
        self.syndrome = syndrome
        super().__init__(f"Syndrome {syndrome} is not reachable by any error mechanism")


class TableTooLargeError(DecodingError):
    """Raised when a lookup table would need too many syndrome bits."""

    def __init__(self, detectors: int, limit: int) -> None:
        self.detectors = detectors
        self.limit = limit
        super().__init__(f"Lookup table over {detectors} detectors exceeds the limit of {limit}")


# ---------------------------------------------------------------------------
# Channel and statistics errors
# ---------------------------------------------------------------------------


class ChannelError(FactoryError):
    """Raised when noise channels or fidelity statistics cannot be computed."""


class BasisMismatchError(ChannelError):
    """Raised when channels measured in different bases are combined."""

    def __init__(self, left: str, right: str) -> None:
        self.left = left
        self.right = right
        super().__init__(f"Cannot combine a {left}-basis channel with a {right}-basis channel")


class DegeneratePosteriorError(ChannelError):
    """Raised when every posterior sample has zero likelihood."""


class EmptyBasisError(ChannelError):
    """Raised when tomography is requested for a basis without records."""

    def __init__(self, basis: str) -> None:
        self.basis = basis
        super().__init__(f"No records available for basis {basis}")


class BlochNormError(ChannelError):
    """Raised when a Bloch vector lies outside the unit ball."""

    def __init__(self, norm: float) -> None:
        self.norm = norm
        super().__init__(f"Bloch vector norm {norm:.12f} exceeds 1")


# ---------------------------------------------------------------------------
# Report errors
# ---------------------------------------------------------------------------


class ReportError(FactoryError):
    """Raised when a report cannot be assembled or written."""


class EmitError(ReportError):
    """Raised when report files cannot be written."""

    def __init__(self, path: str, reason: str) -> None:
        self.path = path
        self.reason = reason
        super().__init__(f"Cannot write {path}: {reason}")
