"""Decoder outputs and their CSV form."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from src.exceptions import InfeasibleSyndromeError

__all__ = [
    "CSV_HEADER",
    "DecodeResult",
    "Decoder",
    "bits_to_int",
    "decode_rows",
    "int_to_bits",
    "write_results_csv",
]

CSV_HEADER = ("syndrome", "outcome", "weight", "gap", "accepted")


def bits_to_int(bits: Iterable[int]) -> int:
    """Little-endian: element ``i`` becomes bit ``i``."""

    return sum(int(b) << i for i, b in enumerate(bits))


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint8)


@dataclass(frozen=True)
class DecodeResult:
    """Predicted logical flips for one syndrome.

    ``gap`` is ``None`` when it was not requested and ``math.inf`` when only
    one logical class can produce the syndrome.
    """

    syndrome: int
    n_detectors: int
    logical_flips: tuple[int, ...]
    weight: float
    gap: float | None = None
    accepted: bool = True
    feasible: bool = True
    mechanisms: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.gap is not None and self.gap < 0:
            raise ValueError(f"gap must be non-negative, got {self.gap}")

    @classmethod
    def infeasible(cls, syndrome: int, n_detectors: int, n_observables: int) -> DecodeResult:
        return cls(
            syndrome=syndrome,
            n_detectors=n_detectors,
            logical_flips=(0,) * n_observables,
            weight=math.inf,
            accepted=False,
            feasible=False,
        )

    @property
    def flips_key(self) -> int:
        return bits_to_int(self.logical_flips)

    def with_acceptance(self, accepted: bool) -> DecodeResult:
        return DecodeResult(
            syndrome=self.syndrome,
            n_detectors=self.n_detectors,
            logical_flips=self.logical_flips,
            weight=self.weight,
            gap=self.gap,
            accepted=accepted and self.feasible,
            feasible=self.feasible,
            mechanisms=self.mechanisms,
        )

    def raise_if_infeasible(self) -> None:
        if not self.feasible:
            raise InfeasibleSyndromeError(self.syndrome_hex())

    def syndrome_hex(self) -> str:
        digits = max(1, -(-self.n_detectors // 4))
        return f"0x{self.syndrome:0{digits}x}"

    def csv_row(self) -> list[str]:
        return [
            self.syndrome_hex(),
            "".join(str(b) for b in self.logical_flips),
            "inf" if math.isinf(self.weight) else f"{self.weight:.6f}",
            "" if self.gap is None else ("inf" if math.isinf(self.gap) else f"{self.gap:.6f}"),
            "1" if self.accepted else "0",
        ]


def write_results_csv(results: Iterable[DecodeResult], path: Path) -> int:
    """Write one row per result; returns the row count."""

    count = 0
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for result in results:
            writer.writerow(result.csv_row())
            count += 1
    return count


class Decoder(Protocol):
    n_detectors: int
    n_observables: int

    def decode_key(self, syndrome: int) -> DecodeResult: ...


def decode_rows(decoder: Decoder, detectors: np.ndarray) -> list[DecodeResult]:
    """Decode every row of a ``(shots x k)`` detector array, once per distinct syndrome."""

    detectors = np.asarray(detectors, dtype=np.uint8)
    if detectors.ndim != 2 or detectors.shape[1] != decoder.n_detectors:
        raise ValueError(
            f"Expected a (shots x {decoder.n_detectors}) detector array, got {detectors.shape}"
        )
    if detectors.shape[0] == 0:
        return []
    if detectors.shape[1] == 0:
        return [decoder.decode_key(0)] * detectors.shape[0]
    unique, inverse = np.unique(detectors, axis=0, return_inverse=True)
    decoded = [decoder.decode_key(bits_to_int(row)) for row in unique]
    return [decoded[i] for i in inverse.reshape(-1)]
