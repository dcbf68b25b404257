"""Composition of a learned logical-error channel with the ideal channel."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from src.channel.fidelity import BasisCounts, magic_fidelity
from src.channel.ideal import BASES, OUTCOMES, IdealChannel, outcome_statistics
from src.channel.learning import ALL, LogicalChannel
from src.exceptions import BasisMismatchError, ChannelError
from src.pauli.bloch import BlochVector

logger = logging.getLogger(__name__)

__all__ = ["BasisStatistics", "ComposedStatistics", "apply_flips", "compose"]

_OUTCOME_KEYS = np.arange(OUTCOMES)


def apply_flips(flips: np.ndarray, ideal: np.ndarray) -> np.ndarray:
    """``P'(o) = sum_d E(d) C(o xor d)``."""

    composed = np.zeros(OUTCOMES)
    for delta in np.flatnonzero(flips).tolist():
        composed += flips[delta] * ideal[_OUTCOME_KEYS ^ delta]
    return composed


@dataclass(frozen=True)
class BasisStatistics:
    basis: str
    acceptance: float
    expectation: float
    kept_fraction: float
    shots: float

    @property
    def accepted_fraction(self) -> float:
        return self.kept_fraction * self.acceptance

    def counts(self) -> BasisCounts:
        """Effective accepted shots and their +1 count."""

        return BasisCounts.from_expectation(self.shots * self.accepted_fraction, self.expectation)


@dataclass(frozen=True)
class ComposedStatistics:
    stratum: str
    per_basis: Mapping[str, BasisStatistics]

    @property
    def acceptance(self) -> float:
        return float(np.mean([s.acceptance for s in self.per_basis.values()]))

    @property
    def kept_fraction(self) -> float:
        return float(np.mean([s.kept_fraction for s in self.per_basis.values()]))

    @property
    def accepted_fraction(self) -> float:
        return float(np.mean([s.accepted_fraction for s in self.per_basis.values()]))

    def output_bloch(self) -> BlochVector:
        missing = [b for b in BASES if b not in self.per_basis]
        if missing:
            raise ChannelError(f"Output vector needs all three bases, missing {missing}")
        values = np.array([self.per_basis[b].expectation for b in BASES])
        norm = float(np.linalg.norm(values))
        if norm > 1.0:
            logger.debug("Composed Bloch norm %.6f clipped to the unit sphere", norm)
            values /= norm
        return BlochVector.from_array(values)

    def fidelity(self) -> float:
        return magic_fidelity(self.output_bloch())

    def counts(self) -> dict[str, BasisCounts]:
        return {basis: stats.counts() for basis, stats in self.per_basis.items()}


def compose(
    channel: LogicalChannel,
    ideal: IdealChannel,
    stratum: str = ALL,
    bases: Iterable[str] | None = None,
) -> ComposedStatistics:
    """Output statistics of the noisy factory in ``stratum``, basis by basis.

    A flip of any syndrome bit moves an outcome in or out of the accepting
    pattern, so acceptance is recomputed from the composed distribution.
    """

    wanted = tuple(bases) if bases is not None else ideal.bases
    per_basis = {}
    for basis in wanted:
        if basis not in channel.bases:
            raise BasisMismatchError("/".join(channel.bases) or "empty", basis)
        if basis not in ideal.bases:
            raise BasisMismatchError(basis, "/".join(ideal.bases) or "empty")
        composed = apply_flips(channel.distribution(basis, stratum), ideal.distribution(basis))
        acceptance, expectation = outcome_statistics(composed)
        per_basis[basis] = BasisStatistics(
            basis=basis,
            acceptance=acceptance,
            expectation=expectation,
            kept_fraction=channel.kept_fraction(basis, stratum),
            shots=channel.shots[basis],
        )
    statistics = ComposedStatistics(stratum, per_basis)
    logger.debug(
        "Composed stratum %s: acceptance %.5f, kept %.4f",
        stratum,
        statistics.acceptance,
        statistics.kept_fraction,
    )
    return statistics
