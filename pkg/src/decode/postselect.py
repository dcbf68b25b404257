"""Two-stage decoding of factory shots and sliding-scale postselection.

The factory stage decodes only the detectors and logicals of the four
syndrome blocks, as a live factory would, and accepts a shot when the decoded
syndrome outcome is the accepting pattern. The tomography stage then decodes
the full syndrome to read the output logical.

Residual flips ``delta`` compare decoder predictions against the simulated
logical flips: bit 0 (output) comes from the tomography stage and bits 1-4
(syndrome logicals) from the factory stage.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.circuit.detectors import DetectorModel
from src.circuit.factory import ACCEPT_PATTERN, OUTPUT_BLOCK
from src.circuit.sampler import ShotBatch, ShotRecord
from src.decode.mld import MldDecoder, MldTable, build_mld
from src.decode.mle import MleDecoder
from src.decode.results import DecodeResult, Decoder, bits_to_int
from src.exceptions import DecodingError

logger = logging.getLogger(__name__)

__all__ = [
    "ScalePoint",
    "Stage",
    "StageDecoders",
    "StageOutcomes",
    "StagePlan",
    "build_stage_decoders",
    "decode_two_stage",
    "decode_two_stage_batch",
    "default_thresholds",
    "sliding_scale",
    "stage_plan",
]


class Stage(str, Enum):
    FACTORY = "factory"
    TOMOGRAPHY = "tomography"


@dataclass(frozen=True)
class StagePlan:
    detectors: tuple[int, ...]
    observables: tuple[int, ...]


def _block_of(label: str) -> int:
    head = label.split(":", 1)[0]
    if not head.startswith("block") or not head[5:].isdigit():
        raise DecodingError(f"Label {label!r} does not name a block")
    return int(head[5:])


def stage_plan(model: DetectorModel, stage: Stage) -> StagePlan:
    """Detector and observable rows a stage may look at, from the block labels."""

    if stage is Stage.TOMOGRAPHY:
        return StagePlan(tuple(range(model.n_detectors)), tuple(range(model.n_observables)))
    if len(model.detector_labels) != model.n_detectors or (
        len(model.observable_labels) != model.n_observables
    ):
        raise DecodingError("Factory-stage decoding needs block-labelled detectors")
    detectors = tuple(
        i for i, label in enumerate(model.detector_labels) if _block_of(label) != OUTPUT_BLOCK
    )
    observables = tuple(
        i for i, label in enumerate(model.observable_labels) if _block_of(label) != OUTPUT_BLOCK
    )
    return StagePlan(detectors, observables)


# ---------------------------------------------------------------------------
# Stage decoders
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class StageDecoders:
    kind: str
    factory: Decoder
    tomography: Decoder
    factory_plan: StagePlan
    tomography_plan: StagePlan
    table: MldTable | None = None

    def plan(self, stage: Stage) -> StagePlan:
        return self.factory_plan if stage is Stage.FACTORY else self.tomography_plan

    def decoder(self, stage: Stage) -> Decoder:
        return self.factory if stage is Stage.FACTORY else self.tomography

    def key_score(self, full_key: int, factory: DecodeResult, tomography: DecodeResult) -> float:
        """Postselection score of a full syndrome: factory gap, or accepted-output fidelity."""

        if self.kind == "mle":
            return math.inf if factory.gap is None else factory.gap
        assert self.table is not None
        row = self.table.counts(full_key)
        if row is None:
            return 0.0
        patterns = np.arange(row.size)
        accepted = np.ones(row.size, dtype=bool)
        for position, index in enumerate(self.factory_plan.observables):
            accepted &= ((patterns >> index) & 1) == factory.logical_flips[position]
        factory_obs = set(self.factory_plan.observables)
        output = [i for i in self.tomography_plan.observables if i not in factory_obs]
        good = accepted.copy()
        for index in output:
            good &= ((patterns >> index) & 1) == tomography.logical_flips[index]
        total = int(row[accepted].sum())
        return float(row[good].sum() / total) if total else 0.0


def build_stage_decoders(
    model: DetectorModel,
    kind: str = "mle",
    *,
    table: MldTable | None = None,
    table_shots: int = 10_000_000,
    seed: int = 0,
) -> StageDecoders:
    """MLE decoders on the restricted models, or lookup tables (built once and marginalized)."""

    factory_plan = stage_plan(model, Stage.FACTORY)
    tomography_plan = stage_plan(model, Stage.TOMOGRAPHY)
    factory_model = model.restrict(factory_plan.detectors, factory_plan.observables)
    if kind == "mle":
        return StageDecoders(
            kind,
            MleDecoder(factory_model, with_gap=True),
            MleDecoder(model),
            factory_plan,
            tomography_plan,
        )
    if kind == "mld":
        full = table if table is not None else build_mld(model, table_shots, seed)
        factory_table = full.marginal(factory_plan.detectors, factory_plan.observables)
        return StageDecoders(
            kind,
            MldDecoder(factory_table, fallback=MleDecoder(factory_model, with_gap=True)),
            MldDecoder(full, fallback=MleDecoder(model)),
            factory_plan,
            tomography_plan,
            table=full,
        )
    raise DecodingError(f"Unknown decoder {kind!r}")


def decode_two_stage(
    shot: ShotRecord,
    decoders: StageDecoders,
    stage: Stage,
    *,
    reference: Sequence[int] = ACCEPT_PATTERN,
) -> DecodeResult:
    """Decode one shot at ``stage``.

    ``reference`` is the noiseless syndrome outcome of the simulated input; the
    factory stage accepts when ``reference`` XOR the residual flips equals the
    accepting pattern.
    """

    plan = decoders.plan(stage)
    syndrome = bits_to_int(np.asarray(shot.detectors)[list(plan.detectors)])
    result = decoders.decoder(stage).decode_key(syndrome)
    if stage is Stage.TOMOGRAPHY:
        return result
    raw = np.asarray(shot.observables)[list(plan.observables)]
    residual = raw ^ np.asarray(result.logical_flips, dtype=np.uint8)
    outcome = tuple(int(r) ^ int(b) for r, b in zip(reference, residual, strict=True))
    return result.with_acceptance(outcome == tuple(ACCEPT_PATTERN))


# ---------------------------------------------------------------------------
# Batch decoding
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class StageOutcomes:
    """Per-shot two-stage decoding summary."""

    residual: np.ndarray
    accepted: np.ndarray
    score: np.ndarray
    perfect: np.ndarray
    agreement: np.ndarray

    @property
    def shots(self) -> int:
        return int(self.accepted.size)

    def acceptance_rate(self) -> float:
        return float(self.accepted.mean()) if self.shots else 0.0

    def stage_agreement(self) -> float:
        """Share of accepted shots whose two decodes agree on the syndrome logicals."""

        if not self.accepted.any():
            return 1.0
        return float(self.agreement[self.accepted].mean())

    def residual_keys(self) -> np.ndarray:
        width = self.residual.shape[1]
        weights = 1 << np.arange(width, dtype=np.int64)
        return (self.residual.astype(np.int64) * weights).sum(axis=1)

    def kept(self, threshold: float | None = None, *, perfect: bool = False) -> np.ndarray:
        """Shots passing a score threshold, or only perfect-stabilizer shots."""

        if perfect:
            return self.perfect.copy()
        if threshold is None or threshold == -math.inf:
            return np.ones(self.shots, dtype=bool)
        return self.score >= threshold


def decode_two_stage_batch(batch: ShotBatch, decoders: StageDecoders) -> StageOutcomes:
    """Decode every shot at both stages, once per distinct full syndrome."""

    fplan = decoders.factory_plan
    tplan = decoders.tomography_plan
    output = [i for i in tplan.observables if i not in fplan.observables]
    shots = batch.shots
    width = len(tplan.observables)

    keys, inverse = np.unique(batch.syndrome_keys(), return_inverse=True)
    inverse = inverse.reshape(-1)
    predicted = np.zeros((keys.size, width), dtype=np.uint8)
    agree = np.ones(keys.size, dtype=bool)
    feasible = np.ones(keys.size, dtype=bool)
    scores = np.zeros(keys.size)
    for row, key in enumerate(int(k) for k in keys):
        sub_key = sum(((key >> i) & 1) << pos for pos, i in enumerate(fplan.detectors))
        fres = decoders.factory.decode_key(sub_key)
        tres = decoders.tomography.decode_key(key)
        for position, index in enumerate(fplan.observables):
            predicted[row, index] = fres.logical_flips[position]
            agree[row] &= tres.logical_flips[index] == fres.logical_flips[position]
        for index in output:
            predicted[row, index] = tres.logical_flips[index]
        feasible[row] = fres.feasible and tres.feasible
        scores[row] = decoders.key_score(key, fres, tres)

    residual = batch.observables ^ predicted[inverse]
    syndrome_residual = residual[:, list(fplan.observables)]
    accepted = ~syndrome_residual.any(axis=1) & feasible[inverse]
    perfect = ~batch.detectors.any(axis=1)
    outcomes = StageOutcomes(residual, accepted, scores[inverse], perfect, agree[inverse])
    logger.info(
        "Two-stage decoding of %d shots (%d syndromes): acceptance %.4f, stage agreement %.4f",
        shots,
        keys.size,
        outcomes.acceptance_rate(),
        outcomes.stage_agreement(),
    )
    return outcomes


# ---------------------------------------------------------------------------
# Sliding scale
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalePoint:
    label: str
    threshold: float | None
    accepted_fraction: float
    output_error: float
    kept_shots: int


def default_thresholds(outcomes: StageOutcomes, points: int = 12) -> list[float]:
    """``-inf`` followed by quantiles of the finite scores of accepted shots."""

    scores = outcomes.score[outcomes.accepted]
    finite = np.unique(scores[np.isfinite(scores)])
    if finite.size == 0:
        return [-math.inf]
    quantiles = np.quantile(finite, np.linspace(0, 1, points)[1:-1]) if points > 2 else []
    return [-math.inf, *sorted({float(q) for q in quantiles})]


def _point(
    outcomes: StageOutcomes, label: str, threshold: float | None, kept: np.ndarray
) -> ScalePoint:
    mask = kept & outcomes.accepted
    count = int(mask.sum())
    error = float(outcomes.residual[mask, 0].mean()) if count else math.nan
    fraction = count / outcomes.shots if outcomes.shots else 0.0
    return ScalePoint(label, threshold, fraction, error, count)


def sliding_scale(
    records: ShotBatch | StageOutcomes,
    decoders: StageDecoders | None = None,
    thresholds: Sequence[float] | None = None,
) -> list[ScalePoint]:
    """Accepted fraction and output logical error as the score threshold rises.

    The first point (threshold ``-inf``) keeps every factory-accepted shot; the
    last keeps only shots whose detectors are all zero. Accepted fractions
    include the factory acceptance.
    """

    if isinstance(records, ShotBatch):
        if decoders is None:
            raise DecodingError("Decoding raw shots needs stage decoders")
        outcomes = decode_two_stage_batch(records, decoders)
    else:
        outcomes = records
    knobs = sorted(thresholds) if thresholds is not None else default_thresholds(outcomes)
    curve = [
        _point(outcomes, f"score>={threshold:g}", threshold, outcomes.kept(threshold))
        for threshold in knobs
    ]
    curve.append(_point(outcomes, "perfect", None, outcomes.kept(perfect=True)))
    return curve
