"""Learning the classical logical-error channel of the noisy factory.

The noisy Clifford factory is run on reference inputs whose noiseless logical
record is fixed, so every shot's residual flip pattern is a sample of the
channel. Patterns are keyed like ideal outcomes: bit 0 is the output logical
and bits 1-4 are the syndrome logicals.

Channels are tallied per output basis and per postselection stratum. Strata
look only at detector data, so a learned channel conditioned on a stratum
composes with any ideal input.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from src.channel.ideal import BASES, OUTCOMES, SYNDROME_MASK
from src.circuit.detectors import DetectorModel, instrument
from src.circuit.factory import ACCEPT_PATTERN, BLOCKS, build_factory_circuit, distillation_circuit
from src.circuit.ir import Circuit, Gate
from src.circuit.noise import NoiseModel
from src.circuit.sampler import sample
from src.codes.css import CssCode
from src.decode.mld import MldTable
from src.decode.postselect import StageDecoders, build_stage_decoders, decode_two_stage_batch
from src.exceptions import BasisMismatchError, ChannelError
from src.pauli.tableau import tableau_run

logger = logging.getLogger(__name__)

__all__ = [
    "ALL",
    "PERFECT",
    "LogicalChannel",
    "learn_channel",
    "learn_channels",
    "pattern_text",
    "reference_circuit",
    "reference_offset",
    "reference_state_prep",
    "stratum_label",
]

ALL = "all"
PERFECT = "perfect"
CHANNEL_FORMAT = "logical-channel/1"

_NORMALIZATION_TOLERANCE = 1e-9
_PREPARE_OUTPUT = {"X": ("H",), "Y": ("H", "S"), "Z": ()}


def stratum_label(threshold: float) -> str:
    return f"score>={threshold:g}"


def pattern_text(key: int) -> str:
    """Bit string with the output logical first."""

    return "".join(str((key >> i) & 1) for i in range(BLOCKS))


def _pattern_key(text: str) -> int:
    if len(text) != BLOCKS or set(text) - {"0", "1"}:
        raise ChannelError(f"Bad flip pattern {text!r}")
    return sum(int(c) << i for i, c in enumerate(text))


# ---------------------------------------------------------------------------
# Reference inputs
# ---------------------------------------------------------------------------


def reference_state_prep(basis: str) -> Circuit:
    """Five-qubit Clifford input whose distilled record is deterministic.

    Qubit 0 is prepared in the +1 eigenstate of ``basis`` and the syndrome
    qubits in the accepting pattern; the inverse distillation circuit then
    maps this to the state the factory must receive.
    """

    if basis not in BASES:
        raise ChannelError(f"Unknown basis {basis!r}")
    circuit = Circuit(BLOCKS)
    for name in _PREPARE_OUTPUT[basis]:
        circuit.add_single(name, (0,), tag="input")
    flips = [Gate("X", (q + 1,)) for q, bit in enumerate(ACCEPT_PATTERN) if bit]
    if flips:
        circuit.add_layer(flips, tag="input")
    for layer in distillation_circuit().inverse().layers:
        circuit.add_layer(layer.gates, tag="input")
    return circuit


def reference_circuit(code: CssCode, basis: str, *, source: str = "published") -> Circuit:
    return build_factory_circuit(
        code, output_basis=basis, source=source, input_fragment=reference_state_prep(basis)
    )


def _observable_values(circuit: Circuit, seed: int) -> tuple[int, ...]:
    record = tableau_run(circuit, seed=seed).record
    return tuple(
        (obs.offset + int(sum(int(record[r]) for r in obs.records))) % 2
        for obs in circuit.observables
    )


def reference_offset(
    code: CssCode, basis: str, *, source: str = "published", circuit: Circuit | None = None
) -> tuple[int, ...]:
    """Noiseless logical record of the reference factory, checked to be deterministic."""

    circuit = circuit if circuit is not None else reference_circuit(code, basis, source=source)
    first = _observable_values(circuit, seed=0)
    second = _observable_values(circuit, seed=1)
    if first != second:
        raise ChannelError(f"Reference record in basis {basis} is not deterministic")
    return first


# ---------------------------------------------------------------------------
# Channel container
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class LogicalChannel:
    """Tallies of residual flip patterns per basis and stratum.

    ``tallies[b][s]`` has one entry per pattern; its sum is the number of
    shots kept by stratum ``s`` out of ``shots[b]``.
    """

    tallies: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    shots: dict[str, float] = field(default_factory=dict)
    offsets: dict[str, tuple[int, ...]] = field(default_factory=dict)
    agreement: dict[str, float] = field(default_factory=dict)

    @classmethod
    def identity(cls, bases: Iterable[str] = BASES) -> LogicalChannel:
        channel = cls()
        for basis in bases:
            row = np.zeros(OUTCOMES)
            row[0] = 1.0
            channel.tallies[basis] = {ALL: row}
            channel.shots[basis] = 1.0
        return channel

    @property
    def bases(self) -> tuple[str, ...]:
        return tuple(b for b in BASES if b in self.tallies)

    def strata(self, basis: str) -> tuple[str, ...]:
        return tuple(self._basis(basis))

    def _basis(self, basis: str) -> dict[str, np.ndarray]:
        if basis not in self.tallies:
            raise BasisMismatchError("/".join(self.bases) or "empty", basis)
        return self.tallies[basis]

    def _row(self, basis: str, stratum: str) -> np.ndarray:
        rows = self._basis(basis)
        if stratum not in rows:
            raise ChannelError(f"Channel has no stratum {stratum!r} in basis {basis}")
        return rows[stratum]

    def kept_shots(self, basis: str, stratum: str = ALL) -> float:
        return float(self._row(basis, stratum).sum())

    def kept_fraction(self, basis: str, stratum: str = ALL) -> float:
        total = self.shots.get(basis, 0.0)
        return self.kept_shots(basis, stratum) / total if total else 0.0

    def distribution(self, basis: str, stratum: str = ALL) -> np.ndarray:
        row = self._row(basis, stratum)
        total = row.sum()
        if total <= 0:
            raise ChannelError(f"Stratum {stratum!r} kept no shots in basis {basis}")
        return row / total

    def non_identity_mass(self, basis: str, stratum: str = ALL) -> float:
        return float(1.0 - self.distribution(basis, stratum)[0])

    def syndrome_mass(self, basis: str, stratum: str = ALL) -> float:
        """Probability that at least one syndrome logical is flipped."""

        dist = self.distribution(basis, stratum)
        keys = np.arange(OUTCOMES)
        return float(dist[(keys & SYNDROME_MASK) != 0].sum())

    def merge(self, other: LogicalChannel) -> LogicalChannel:
        """Pool the shots of two channels; strata must agree on shared bases."""

        merged = LogicalChannel()
        for source in (self, other):
            for basis, rows in source.tallies.items():
                if basis in source.agreement:
                    weight = merged.shots.get(basis, 0.0)
                    previous = merged.agreement.get(basis, source.agreement[basis])
                    mixed = previous * weight + source.agreement[basis] * source.shots[basis]
                    merged.agreement[basis] = mixed / (weight + source.shots[basis])
                target = merged.tallies.setdefault(basis, {})
                if basis in merged.shots and set(target) != set(rows):
                    raise ChannelError(f"Cannot merge channels with different strata in {basis}")
                for stratum, row in rows.items():
                    target[stratum] = target.get(stratum, np.zeros(OUTCOMES)) + row
                merged.shots[basis] = merged.shots.get(basis, 0.0) + source.shots[basis]
                if basis in source.offsets:
                    offset = merged.offsets.setdefault(basis, source.offsets[basis])
                    if offset != source.offsets[basis]:
                        raise ChannelError(f"Reference offsets disagree in basis {basis}")
        return merged

    # -----------------------------------------------------------------------
    # Text form
    # -----------------------------------------------------------------------

    def to_json(self) -> str:
        """``basis -> stratum -> {pattern: probability}`` plus kept and total shot counts."""

        payload: dict[str, object] = {"format": CHANNEL_FORMAT}
        bases: dict[str, object] = {}
        for basis in self.bases:
            strata = {}
            for stratum, row in self.tallies[basis].items():
                total = float(row.sum())
                flips = {
                    pattern_text(key): float(row[key] / total)
                    for key in np.flatnonzero(row).tolist()
                    if total > 0
                }
                strata[stratum] = {"kept": total, "flips": flips}
            entry: dict[str, object] = {"shots": self.shots[basis], "strata": strata}
            if basis in self.offsets:
                entry["offset"] = "".join(map(str, self.offsets[basis]))
            if basis in self.agreement:
                entry["agreement"] = self.agreement[basis]
            bases[basis] = entry
        payload["bases"] = bases
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> LogicalChannel:
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ChannelError(f"Channel text is not valid JSON: {exc}") from exc
        if payload.get("format") != CHANNEL_FORMAT:
            raise ChannelError(f"Unsupported channel format {payload.get('format')!r}")
        channel = cls()
        for basis, entry in payload["bases"].items():
            if basis not in BASES:
                raise ChannelError(f"Unknown basis {basis!r}")
            rows = {}
            for stratum, data in entry["strata"].items():
                row = np.zeros(OUTCOMES)
                for pattern, probability in data["flips"].items():
                    row[_pattern_key(pattern)] = probability
                if data["kept"] > 0:
                    if abs(row.sum() - 1.0) > _NORMALIZATION_TOLERANCE:
                        raise ChannelError(f"Stratum {stratum!r} in {basis} is not normalized")
                    row *= data["kept"]
                rows[stratum] = row
            channel.tallies[basis] = rows
            channel.shots[basis] = float(entry["shots"])
            if "offset" in entry:
                channel.offsets[basis] = tuple(int(c) for c in entry["offset"])
            if "agreement" in entry:
                channel.agreement[basis] = float(entry["agreement"])
        return channel


# ---------------------------------------------------------------------------
# Learning
# ---------------------------------------------------------------------------


def learn_channel(
    code: CssCode,
    noise: NoiseModel,
    basis: str,
    shots: int,
    decoder: str | StageDecoders = "mle",
    strata: Sequence[float] = (),
    seed: int = 0,
    *,
    source: str = "published",
    table: MldTable | None = None,
    table_shots: int = 10_000_000,
    workers: int | None = None,
    model: DetectorModel | None = None,
) -> LogicalChannel:
    """Sample the reference factory in ``basis`` and tally decoded residual flips.

    Besides ``all`` and ``perfect``, one stratum per score threshold in
    ``strata`` keeps the shots whose postselection score reaches it.
    """

    if shots < 1:
        raise ChannelError("shots must be at least 1")
    circuit = reference_circuit(code, basis, source=source)
    offset = reference_offset(code, basis, circuit=circuit)
    if model is None:
        model = instrument(circuit, noise)
    decoders = (
        decoder
        if isinstance(decoder, StageDecoders)
        else build_stage_decoders(model, decoder, table=table, table_shots=table_shots, seed=seed)
    )
    batch = sample(model, shots, seed, workers=workers)
    outcomes = decode_two_stage_batch(batch, decoders)
    keys = outcomes.residual_keys()

    masks = {ALL: outcomes.kept(), PERFECT: outcomes.kept(perfect=True)}
    for threshold in strata:
        if math.isfinite(threshold):
            masks[stratum_label(threshold)] = outcomes.kept(threshold)
    rows = {
        name: np.bincount(keys[mask], minlength=OUTCOMES).astype(float)
        for name, mask in masks.items()
    }
    channel = LogicalChannel(
        {basis: rows}, {basis: float(shots)}, {basis: offset}, {basis: outcomes.stage_agreement()}
    )
    logger.info(
        "Learned %s-basis channel for %s from %d shots: non-identity mass %.5f, perfect %.4f",
        basis,
        code.label,
        shots,
        channel.non_identity_mass(basis),
        channel.kept_fraction(basis, PERFECT),
    )
    return channel


def learn_channels(
    code: CssCode,
    noise: NoiseModel,
    shots_per_basis: int,
    decoder: str = "mle",
    strata: Sequence[float] = (),
    seed: int = 0,
    **kwargs: Any,
) -> LogicalChannel:
    """Channels for all three bases, each conditioned independently, with child seeds."""

    children = np.random.SeedSequence(seed).spawn(len(BASES))
    channel = LogicalChannel()
    for basis, child in zip(BASES, children, strict=True):
        child_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        channel = channel.merge(
            learn_channel(
                code, noise, basis, shots_per_basis, decoder, strata, child_seed, **kwargs
            )
        )
    return channel
