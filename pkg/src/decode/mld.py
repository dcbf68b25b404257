"""Sampled maximum-likelihood lookup decoding.

The table tallies, for every observed syndrome, how often each logical flip
pattern occurred. Decoding returns the most frequent pattern; syndromes never
seen while building the table fall back to an MLE decoder when one is given.
"""

from __future__ import annotations

import logging
import math
import threading
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from src.circuit.detectors import DetectorModel
from src.circuit.sampler import ShotBatch, sample
from src.config import config
from src.decode.mle import MleDecoder
from src.decode.results import DecodeResult, bits_to_int, int_to_bits
from src.exceptions import DecodingError, TableTooLargeError

logger = logging.getLogger(__name__)

__all__ = ["CHUNK_SHOTS", "MldDecoder", "MldTable", "build_mld"]

CHUNK_SHOTS = 1 << 20


@dataclass(eq=False)
class MldTable:
    """Syndrome key -> ``2**l`` tallies of logical flip patterns."""

    n_detectors: int
    n_observables: int
    tallies: dict[int, np.ndarray] = field(default_factory=dict)
    total: int = 0

    @classmethod
    def from_batch(cls, batch: ShotBatch) -> MldTable:
        table = cls(batch.detectors.shape[1], batch.observables.shape[1])
        table.add_batch(batch)
        return table

    @property
    def key_count(self) -> int:
        return len(self.tallies)

    def add_batch(self, batch: ShotBatch) -> None:
        if batch.detectors.shape[1] != self.n_detectors:
            raise DecodingError("Batch detector count does not match the table")
        if batch.observables.shape[1] != self.n_observables:
            raise DecodingError("Batch observable count does not match the table")
        l = self.n_observables
        combined = (batch.syndrome_keys() << np.uint64(l)) | batch.observable_keys()
        keys, counts = np.unique(combined, return_counts=True)
        mask = (1 << l) - 1
        for key, count in zip(keys.tolist(), counts.tolist(), strict=True):
            row = self.tallies.setdefault(key >> l, np.zeros(1 << l, dtype=np.int64))
            row[key & mask] += count
        self.total += batch.shots

    def merge(self, other: MldTable) -> MldTable:
        if (other.n_detectors, other.n_observables) != (self.n_detectors, self.n_observables):
            raise DecodingError("Cannot merge tables over different detectors")
        merged = MldTable(self.n_detectors, self.n_observables, total=self.total + other.total)
        for source in (self.tallies, other.tallies):
            for key, row in source.items():
                if key in merged.tallies:
                    merged.tallies[key] = merged.tallies[key] + row
                else:
                    merged.tallies[key] = row.copy()
        return merged

    def counts(self, key: int) -> np.ndarray | None:
        return self.tallies.get(key)

    def marginal(self, detectors: Sequence[int], observables: Sequence[int]) -> MldTable:
        """Table over a subset of detectors and observables, summing out the rest."""

        det = list(detectors)
        obs = list(observables)
        patterns = np.arange(1 << self.n_observables)
        projected = np.zeros_like(patterns)
        for position, index in enumerate(obs):
            projected |= ((patterns >> index) & 1) << position
        table = MldTable(len(det), len(obs), total=self.total)
        for key, row in self.tallies.items():
            sub_key = sum(((key >> index) & 1) << position for position, index in enumerate(det))
            target = table.tallies.setdefault(sub_key, np.zeros(1 << len(obs), dtype=np.int64))
            np.add.at(target, projected, row)
        return table

    def most_likely(self, key: int) -> tuple[int, float] | None:
        """Most frequent pattern (lowest on ties) and ``log(n_best / n_second)``."""

        row = self.tallies.get(key)
        if row is None:
            return None
        best = int(np.argmax(row))
        rest = np.delete(row, best)
        second = int(rest.max()) if rest.size else 0
        gap = math.inf if second == 0 else math.log(int(row[best]) / second)
        return best, gap

    def key_fidelity(self, key: int) -> float:
        """Share of the key's shots that carry its most frequent pattern."""

        row = self.tallies.get(key)
        if row is None or row.sum() == 0:
            return 0.0
        return float(row.max() / row.sum())


def build_mld(
    model: DetectorModel,
    shots: int,
    seed: int,
    *,
    chunk: int = CHUNK_SHOTS,
    workers: int | None = None,
) -> MldTable:
    """Sample ``shots`` records from ``model`` in chunks and tally them."""

    limit = config.mld_max_detectors
    if model.n_detectors > limit:
        raise TableTooLargeError(model.n_detectors, limit)
    sizes = [chunk] * (shots // chunk)
    if shots % chunk:
        sizes.append(shots % chunk)
    table = MldTable(model.n_detectors, model.n_observables)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    for size, child in zip(sizes, children, strict=True):
        chunk_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        table.add_batch(sample(model, size, chunk_seed, workers=workers))
    logger.info(
        "Built lookup table from %d shots: %d distinct syndromes over %d detectors",
        shots,
        table.key_count,
        model.n_detectors,
    )
    return table


class MldDecoder:
    def __init__(self, table: MldTable, *, fallback: MleDecoder | None = None) -> None:
        if fallback is not None and (
            fallback.n_detectors != table.n_detectors
            or fallback.n_observables != table.n_observables
        ):
            raise DecodingError("Fallback decoder must cover the same detectors and observables")
        self.table = table
        self.fallback = fallback
        self._unseen = 0
        self._lock = threading.Lock()

    @property
    def n_detectors(self) -> int:
        return self.table.n_detectors

    @property
    def n_observables(self) -> int:
        return self.table.n_observables

    @property
    def unseen(self) -> int:
        return self._unseen

    def decode_key(self, syndrome: int) -> DecodeResult:
        found = self.table.most_likely(syndrome)
        if found is None:
            with self._lock:
                self._unseen += 1
            logger.warning("Syndrome %#x missing from the lookup table", syndrome)
            if self.fallback is not None:
                return self.fallback.decode_key(syndrome)
            return DecodeResult.infeasible(syndrome, self.n_detectors, self.n_observables)
        pattern, gap = found
        row = self.table.tallies[syndrome]
        return DecodeResult(
            syndrome=syndrome,
            n_detectors=self.n_detectors,
            logical_flips=tuple(int(b) for b in int_to_bits(pattern, self.n_observables)),
            weight=-math.log(int(row[pattern]) / int(row.sum())),
            gap=gap,
        )

    def decode(self, detectors: Sequence[int] | np.ndarray) -> DecodeResult:
        return self.decode_key(bits_to_int(detectors))
