"""Bit-packed Pauli strings with exact phase bookkeeping.

A ``PauliString`` stores its X and Z parts as little-endian bit vectors packed
into 64-bit words, plus a phase exponent ``k`` so the operator reads
``i**k`` times the tensor product of its letters (``Y`` is a letter, not
``XZ``). Products track the phase exactly, which is what the tableau and the
injection checks rely on.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from functools import reduce

import numpy as np

from src.exceptions import LengthMismatchError, PauliError, QubitRangeError

__all__ = [
    "PauliString",
    "commutes",
    "pack_bits",
    "pauli_mul",
    "popcount",
    "unpack_bits",
]

_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_LETTER_MATRIX = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pack_bits(bits: Iterable[int] | np.ndarray) -> np.ndarray:
    """Pack a 0/1 vector into little-endian ``uint64`` words (bit ``q`` of word ``q // 64``)."""

    flat = np.asarray(bits, dtype=np.uint8).ravel() & 1
    n_words = max(1, -(-flat.size // 64))
    padded = np.zeros(n_words * 64, dtype=np.uint8)
    padded[: flat.size] = flat
    return np.packbits(padded, bitorder="little").view("<u8").astype(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`, truncated to ``n`` entries."""

    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n]


def popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


@dataclass(frozen=True, eq=False)
class PauliString:
    """An ``n``-qubit Pauli operator ``i**phase * P_0 ⊗ ... ⊗ P_{n-1}``."""

    n: int
    x_words: np.ndarray
    z_words: np.ndarray
    phase: int = 0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise PauliError("Qubit count cannot be negative")
        if self.x_words.shape != self.z_words.shape:
            raise PauliError("X and Z words must have identical shapes")
        expected_words = max(1, -(-self.n // 64))
        if self.x_words.shape != (expected_words,):
            raise PauliError(f"Expected {expected_words} words for {self.n} qubits")
        if self.phase not in (0, 1, 2, 3):
            raise PauliError(f"Phase exponent must be in 0..3, got {self.phase}")

    # -----------------------------------------------------------------------
    # Constructors
    # -----------------------------------------------------------------------

    @classmethod
    def from_bits(
        cls, x_bits: Iterable[int] | np.ndarray, z_bits: Iterable[int] | np.ndarray, phase: int = 0
    ) -> PauliString:
        x_arr = np.asarray(x_bits, dtype=np.uint8).ravel()
        z_arr = np.asarray(z_bits, dtype=np.uint8).ravel()
        if x_arr.size != z_arr.size:
            raise LengthMismatchError(x_arr.size, z_arr.size)
        return cls(x_arr.size, pack_bits(x_arr), pack_bits(z_arr), phase % 4)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        zeros = np.zeros(n, dtype=np.uint8)
        return cls.from_bits(zeros, zeros)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse labels such as ``"XZ"``, ``"-iY"`` or ``"+IXX"``."""

        text = label.strip()
        phase = 0
        if text.startswith(("-i", "+i")):
            phase = 3 if text[0] == "-" else 1
            text = text[2:]
        elif text.startswith("i"):
            phase, text = 1, text[1:]
        elif text.startswith(("-", "+")):
            phase = 2 if text[0] == "-" else 0
            text = text[1:]
        if any(letter not in _LETTER_BITS for letter in text):
            raise PauliError(f"Invalid Pauli label {label!r}")
        x_bits = [_LETTER_BITS[letter][0] for letter in text]
        z_bits = [_LETTER_BITS[letter][1] for letter in text]
        return cls.from_bits(x_bits, z_bits, phase)

    @classmethod
    def from_support(cls, n: int, support: Iterable[int], letter: str) -> PauliString:
        """Return ``letter`` on every qubit of ``support`` and identity elsewhere."""

        if letter not in _LETTER_BITS:
            raise PauliError(f"Invalid Pauli letter {letter!r}")
        x_bit, z_bit = _LETTER_BITS[letter]
        x_bits = np.zeros(n, dtype=np.uint8)
        z_bits = np.zeros(n, dtype=np.uint8)
        for qubit in support:
            if not 0 <= qubit < n:
                raise QubitRangeError(qubit, n)
            x_bits[qubit] = x_bit
            z_bits[qubit] = z_bit
        return cls.from_bits(x_bits, z_bits)

    # -----------------------------------------------------------------------
    # Views
    # -----------------------------------------------------------------------

    @property
    def x_bits(self) -> np.ndarray:
        return unpack_bits(self.x_words, self.n)

    @property
    def z_bits(self) -> np.ndarray:
        return unpack_bits(self.z_words, self.n)

    @property
    def weight(self) -> int:
        return popcount(self.x_words | self.z_words)

    @property
    def coefficient(self) -> complex:
        return complex(1j**self.phase)

    def letter(self, qubit: int) -> str:
        if not 0 <= qubit < self.n:
            raise QubitRangeError(qubit, self.n)
        return _BITS_LETTER[(int(self.x_bits[qubit]), int(self.z_bits[qubit]))]

    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def with_phase(self, phase: int) -> PauliString:
        return PauliString(self.n, self.x_words.copy(), self.z_words.copy(), phase % 4)

    def __neg__(self) -> PauliString:
        return self.with_phase(self.phase + 2)

    def __mul__(self, other: PauliString) -> PauliString:
        return pauli_mul(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.n == other.n
            and self.phase == other.phase
            and np.array_equal(self.x_words, other.x_words)
            and np.array_equal(self.z_words, other.z_words)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.phase, self.x_words.tobytes(), self.z_words.tobytes()))

    def __str__(self) -> str:
        letters = "".join(
            _BITS_LETTER[(int(x), int(z))] for x, z in zip(self.x_bits, self.z_bits, strict=True)
        )
        return _PHASE_PREFIX[self.phase] + letters

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n`` matrix with qubit 0 as the most significant tensor factor."""

        if self.n > 12:
            raise PauliError("Dense matrices are limited to 12 qubits")
        factors = [_LETTER_MATRIX[self.letter(q)] for q in range(self.n)]
        dense = reduce(np.kron, factors, np.eye(1, dtype=complex))
        return self.coefficient * dense


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Group product ``a · b`` with the exact phase.

    Internally each operand is rewritten as ``i**r X^x Z^z``; moving ``Z^z1``
    past ``X^x2`` contributes ``(-1)**|z1 & x2|``.
    """

    if a.n != b.n:
        raise LengthMismatchError(a.n, b.n)
    r_a = a.phase + popcount(a.x_words & a.z_words)
    r_b = b.phase + popcount(b.x_words & b.z_words)
    total = r_a + r_b + 2 * popcount(a.z_words & b.x_words)
    x_words = a.x_words ^ b.x_words
    z_words = a.z_words ^ b.z_words
    phase = (total - popcount(x_words & z_words)) % 4
    return PauliString(a.n, x_words, z_words, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True when the symplectic inner product of ``a`` and ``b`` vanishes."""

    if a.n != b.n:
        raise LengthMismatchError(a.n, b.n)
    overlap = popcount(a.x_words & b.z_words) + popcount(a.z_words & b.x_words)
    return overlap % 2 == 0
