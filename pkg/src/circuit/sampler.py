"""Word-parallel sampling of detector and observable flips from a detector model.

Shots are packed 64 to a ``uint64`` lane. The accumulator holds one row of
lanes per detector and observable; each mechanism draws a Bernoulli mask over
the shots and XORs it into the rows it flips.

Shots are cut into fixed-size shards, each with its own child seed, so the
output depends only on ``(model, shots, seed)`` and not on the worker count.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from src.circuit.detectors import DetectorModel
from src.config import config
from src.exceptions import CircuitError
from src.pauli.pauli import pack_bits

logger = logging.getLogger(__name__)

__all__ = ["SHARD_SHOTS", "ShotBatch", "ShotRecord", "mechanism_targets", "sample"]

SHARD_SHOTS = 1 << 16


@dataclass(frozen=True)
class ShotRecord:
    detectors: np.ndarray
    observables: np.ndarray

    @property
    def syndrome_key(self) -> int:
        return int(sum(int(bit) << i for i, bit in enumerate(self.detectors)))


@dataclass(frozen=True, eq=False)
class ShotBatch:
    """``detectors`` is ``(shots x k)`` and ``observables`` ``(shots x l)``, both ``uint8``."""

    detectors: np.ndarray
    observables: np.ndarray

    @property
    def shots(self) -> int:
        return int(self.detectors.shape[0])

    def __len__(self) -> int:
        return self.shots

    def records(self) -> Iterator[ShotRecord]:
        for s, l_raw in zip(self.detectors, self.observables, strict=True):
            yield ShotRecord(s, l_raw)

    def syndrome_keys(self) -> np.ndarray:
        """Detector bits packed little-endian into one integer per shot."""

        k = self.detectors.shape[1]
        weights = np.left_shift(np.uint64(1), np.arange(k, dtype=np.uint64))
        return (self.detectors.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)

    def observable_keys(self) -> np.ndarray:
        l = self.observables.shape[1]
        weights = np.left_shift(np.uint64(1), np.arange(l, dtype=np.uint64))
        return (self.observables.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)

    def select(self, mask: np.ndarray) -> ShotBatch:
        return ShotBatch(self.detectors[mask], self.observables[mask])

    @classmethod
    def concatenate(cls, batches: list[ShotBatch]) -> ShotBatch:
        return cls(
            np.concatenate([b.detectors for b in batches]),
            np.concatenate([b.observables for b in batches]),
        )


def mechanism_targets(model: DetectorModel) -> list[np.ndarray]:
    """Rows each mechanism flips, indexing detectors first and then observables."""

    stacked = sparse.vstack([model.check, model.logicals]).tocsc()
    stacked.eliminate_zeros()
    return [stacked.indices[stacked.indptr[j] : stacked.indptr[j + 1]] for j in range(model.m)]


def _sample_shard(
    targets: list[np.ndarray],
    probabilities: np.ndarray,
    shots: int,
    width: int,
    seed: np.random.SeedSequence,
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lanes = -(-shots // 64)
    acc = np.zeros((width, lanes), dtype=np.uint64)
    for rows, p in zip(targets, probabilities, strict=True):
        fired = pack_bits(rng.random(shots) < p)
        acc[rows] ^= fired
    bits = np.unpackbits(acc.astype("<u8").view(np.uint8), axis=1, bitorder="little")
    return np.ascontiguousarray(bits[:, :shots].T)


def sample(
    model: DetectorModel, shots: int, seed: int, *, workers: int | None = None
) -> ShotBatch:
    """Draw ``shots`` independent shots; mechanism ``j`` fires with probability ``p_j``."""

    if shots < 1:
        raise CircuitError("shots must be at least 1")
    k = model.n_detectors
    width = k + model.n_observables
    targets = mechanism_targets(model)
    sizes = [SHARD_SHOTS] * (shots // SHARD_SHOTS)
    if shots % SHARD_SHOTS:
        sizes.append(shots % SHARD_SHOTS)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    pool_size = workers or config.workers

    def run(index: int) -> np.ndarray:
        return _sample_shard(targets, model.probabilities, sizes[index], width, seeds[index])

    if pool_size > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            shards = list(pool.map(run, range(len(sizes))))
    else:
        shards = [run(i) for i in range(len(sizes))]
    bits = np.concatenate(shards)
    logger.debug("Sampled %d shots over %d mechanisms in %d shards", shots, model.m, len(sizes))
    return ShotBatch(bits[:, :k].copy(), bits[:, k:].copy())
