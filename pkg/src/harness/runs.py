"""End-to-end runs: injection, factory, coherent probe, rescale study and benchmarks."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.audit import audit_logger
from src.channel.compose import compose
from src.channel.fidelity import (
    BasisCounts,
    bayes_interval,
    input_fidelity,
    magic_fidelity,
    tomography_estimate,
)
from src.channel.ideal import BASES, ideal_channel, noisy_dense_distribution, outcome_statistics
from src.channel.learning import ALL, PERFECT, LogicalChannel, learn_channels, stratum_label
from src.circuit.detectors import DetectorModel, instrument
from src.circuit.factory import build_factory_circuit, build_injection_block
from src.circuit.noise import NoiseModel
from src.circuit.sampler import ShotBatch, sample
from src.codes.color import color_code
from src.decode.mld import MldDecoder, build_mld
from src.decode.mle import MleDecoder
from src.decode.results import Decoder, decode_rows
from src.harness.experiment import ExperimentConfig
from src.harness.report import (
    BenchSection,
    CurvePoint,
    FactorySection,
    FidelityEstimate,
    InjectionSection,
    PhasePoint,
    ProbePoint,
    ProbeSection,
    RescalePoint,
    RescaleSection,
)
from src.pauli.bloch import BlochVector

logger = logging.getLogger(__name__)

__all__ = [
    "CrossCheck",
    "bench",
    "coherent_probe",
    "default_thresholds",
    "dense_cross_check",
    "phase_sweep",
    "rescale_study",
    "run_factory",
    "run_injection",
    "suppression_slope",
]

_INJECTED_KIND = {"X": "plus", "Y": "plus_i", "Z": "zero"}
_GAP_THRESHOLDS = (1.0, 2.0, 3.0, 4.0, 6.0, 8.0)
_SCORE_THRESHOLDS = (0.6, 0.8, 0.9, 0.95, 0.99)
_SMALLEST_INFIDELITY = 1e-15
SLOPE_ANGLES = tuple(math.pi * t for t in (0.02, 0.04, 0.06, 0.08, 0.10))


def default_thresholds(decoder: str) -> tuple[float, ...]:
    """Gap thresholds for MLE, accepted-output fidelity thresholds for MLD."""

    return _GAP_THRESHOLDS if decoder == "mle" else _SCORE_THRESHOLDS


def _child_seeds(seed: int, count: int) -> list[int]:
    return [
        int(child.generate_state(1, dtype=np.uint64)[0])
        for child in np.random.SeedSequence(seed).spawn(count)
    ]


def _clip(value: float) -> float:
    return min(1.0, max(0.0, value))


def _estimate(
    point: float, counts: dict[str, BasisCounts], samples: int, seed: int
) -> FidelityEstimate:
    median, (lo, hi) = bayes_interval(counts, samples, seed)
    return FidelityEstimate(point=_clip(point), median=median, ci_lo=lo, ci_hi=hi)


# ---------------------------------------------------------------------------
# Injection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _InjectionFlips:
    raw: dict[str, np.ndarray]
    corrected: dict[str, np.ndarray]
    perfect: dict[str, np.ndarray]
    shots: int

    def perfect_fraction(self) -> float:
        kept = sum(flips.size for flips in self.perfect.values())
        return kept / (self.shots * len(BASES))


def _block_decoder(model: DetectorModel, cfg: ExperimentConfig, seed: int) -> Decoder:
    if cfg.decoder == "mld":
        table = build_mld(model, cfg.table_shots, seed)
        return MldDecoder(table, fallback=MleDecoder(model))
    return MleDecoder(model)


def _injection_flips(cfg: ExperimentConfig, noise: NoiseModel, seed: int) -> _InjectionFlips:
    code = color_code(cfg.distance)
    raw: dict[str, np.ndarray] = {}
    corrected: dict[str, np.ndarray] = {}
    perfect: dict[str, np.ndarray] = {}
    for basis, child in zip(BASES, _child_seeds(seed, len(BASES)), strict=True):
        circuit = build_injection_block(
            code, injected=_INJECTED_KIND[basis], basis=basis, source=cfg.source
        )
        model = instrument(circuit, noise)
        batch = sample(model, cfg.shots_per_basis, child)
        decoded = decode_rows(_block_decoder(model, cfg, child), batch.detectors)
        predicted = np.array([r.logical_flips[0] for r in decoded], dtype=np.uint8)
        flips = batch.observables[:, 0]
        raw[basis] = flips
        corrected[basis] = flips ^ predicted
        perfect[basis] = flips[~batch.detectors.any(axis=1)]
    return _InjectionFlips(raw, corrected, perfect, cfg.shots_per_basis)


def phase_sweep(flip_rates: dict[str, float], points: int) -> list[PhasePoint]:
    """Logical X and Y expectations of ``RZ(phi)|+>`` under the measured flip rates.

    Analytic, not simulated: each point scales the ideal ``cos(phi)`` and
    ``sin(phi)`` by ``1 - 2 f`` for that basis's flip rate ``f``, which
    treats the noise as phase-independent.
    """

    sweep = []
    for k in range(points):
        phi = 2 * math.pi * k / points
        sweep.append(
            PhasePoint(
                phase=phi,
                x=(1 - 2 * flip_rates["X"]) * math.cos(phi),
                y=(1 - 2 * flip_rates["Y"]) * math.sin(phi),
            )
        )
    return sweep


def run_injection(cfg: ExperimentConfig) -> InjectionSection:
    """Raw, error-corrected and perfect-stabilizer fidelity of one injected block."""

    flips = _injection_flips(cfg, cfg.noise_model(), cfg.seed)
    reference = BlochVector.magic().rotated_z(cfg.angles[0])
    estimates = {}
    names = ("raw", "corrected", "perfect")
    for name, seed in zip(names, _child_seeds(cfg.seed, len(names)), strict=True):
        vector, counts = tomography_estimate(getattr(flips, name), reference)
        estimates[name] = _estimate(magic_fidelity(vector), counts, cfg.posterior_samples, seed)
    rates = {basis: float(f.mean()) for basis, f in flips.corrected.items()}
    section = InjectionSection(
        raw=estimates["raw"],
        corrected=estimates["corrected"],
        perfect=estimates["perfect"],
        perfect_fraction=flips.perfect_fraction(),
        flip_rates=rates,
        phase_sweep=phase_sweep(rates, cfg.phase_points),
    )
    logger.info(
        "Injection d=%d: raw %.4f, corrected %.4f, perfect %.4f (kept %.3f)",
        cfg.distance,
        section.raw.point,
        section.corrected.point,
        section.perfect.point,
        section.perfect_fraction,
    )
    return section


# ---------------------------------------------------------------------------
# Factory
# ---------------------------------------------------------------------------


def _learn(
    cfg: ExperimentConfig, noise: NoiseModel, seed: int, strata: Sequence[float]
) -> LogicalChannel:
    channel = learn_channels(
        color_code(cfg.distance),
        noise,
        cfg.shots_per_basis,
        cfg.decoder,
        strata,
        seed,
        source=cfg.source,
        table_shots=cfg.table_shots,
    )
    audit_logger.record_event(
        "channel_learned",
        distance=cfg.distance,
        decoder=cfg.decoder,
        rescale=noise.rescale,
        shots_per_basis=cfg.shots_per_basis,
        non_identity_mass={b: channel.non_identity_mass(b) for b in channel.bases},
    )
    return channel


def _curve(
    channel: LogicalChannel, cfg: ExperimentConfig, strata: Sequence[str]
) -> list[CurvePoint]:
    ideal = ideal_channel(cfg.angles)
    curve = []
    for stratum, seed in zip(strata, _child_seeds(cfg.seed, len(strata)), strict=True):
        if any(channel.kept_shots(basis, stratum) == 0 for basis in BASES):
            logger.warning("Stratum %s kept no shots in some basis; skipped", stratum)
            continue
        stats = compose(channel, ideal, stratum)
        counts = stats.counts()
        if any(c.n == 0 for c in counts.values()):
            logger.warning("Stratum %s accepts no shots; skipped", stratum)
            continue
        curve.append(
            CurvePoint(
                label=stratum,
                accepted_fraction=_clip(stats.accepted_fraction),
                fidelity=_estimate(stats.fidelity(), counts, cfg.posterior_samples, seed),
            )
        )
    return curve


def run_factory(
    cfg: ExperimentConfig, injection: InjectionSection | None = None
) -> FactorySection:
    """Learn channels per stratum, compose with the ideal channel and trace the curve.

    The curve runs from no postselection beyond factory acceptance, through
    each score threshold, to perfect-stabilizer shots only.
    """

    thresholds = sorted(cfg.thresholds or default_thresholds(cfg.decoder))
    channel = _learn(cfg, cfg.noise_model(), cfg.seed, thresholds)
    strata = [ALL, *(stratum_label(t) for t in thresholds), PERFECT]
    ideal = ideal_channel(cfg.angles)
    section = FactorySection(
        decoder=cfg.decoder,
        acceptance=compose(channel, ideal, ALL).acceptance,
        ideal_acceptance=ideal.acceptance,
        ideal_fidelity=_clip(ideal.output_fidelity()),
        stage_agreement=dict(channel.agreement),
        curve=_curve(channel, cfg, strata),
        injected=injection.corrected if injection is not None else None,
    )
    logger.info(
        "Factory d=%d (%s): acceptance %.4f (ideal %.4f), %d curve points",
        cfg.distance,
        cfg.decoder,
        section.acceptance,
        section.ideal_acceptance,
        len(section.curve),
    )
    return section


# ---------------------------------------------------------------------------
# Coherent-error probe
# ---------------------------------------------------------------------------


def suppression_slope(angles: Sequence[float] = SLOPE_ANGLES) -> float:
    """Least-squares slope of ``log(1 - F_out)`` against ``log(1 - F_in)``."""

    xs, ys = [], []
    for theta in angles:
        f_in = input_fidelity(theta)
        f_out = ideal_channel([theta] * 5).output_fidelity()
        if 1 - f_in > _SMALLEST_INFIDELITY and 1 - f_out > _SMALLEST_INFIDELITY:
            xs.append(math.log(1 - f_in))
            ys.append(math.log(1 - f_out))
    if len(xs) < 2:
        raise ValueError("Slope fit needs at least two angles with nonzero infidelity")
    return float(np.polyfit(xs, ys, 1)[0])


def coherent_probe(angles: Sequence[float]) -> ProbeSection:
    """Acceptance and fidelities of the ideal factory under a uniform input ``RZ`` error."""

    baseline = ideal_channel().acceptance
    points: list[ProbePoint] = []
    previous: tuple[float, float] | None = None
    for theta in angles:
        channel = ideal_channel([theta] * 5)
        infid_in = 1 - input_fidelity(theta)
        infid_out = 1 - channel.output_fidelity()
        slope = None
        usable = infid_in > _SMALLEST_INFIDELITY and infid_out > _SMALLEST_INFIDELITY
        if usable and previous is not None:
            slope = (math.log(infid_out) - math.log(previous[1])) / (
                math.log(infid_in) - math.log(previous[0])
            )
        coefficient = (
            (channel.acceptance - baseline) / infid_in
            if infid_in > _SMALLEST_INFIDELITY
            else None
        )
        points.append(
            ProbePoint(
                theta=theta,
                acceptance=channel.acceptance,
                input_fidelity=1 - infid_in,
                output_fidelity=1 - infid_out,
                local_slope=slope,
                acceptance_coefficient=coefficient,
            )
        )
        if usable:
            previous = (infid_in, infid_out)
    nonzero = [theta for theta in angles if theta]
    slope = suppression_slope(nonzero) if len(nonzero) >= 2 else None
    return ProbeSection(points=points, suppression_slope=slope)


# ---------------------------------------------------------------------------
# Rescale study
# ---------------------------------------------------------------------------


def _crossing(points: Sequence[RescalePoint]) -> float | None:
    """Rescale where the distilled fidelity falls below the injected one, interpolated."""

    for low, high in zip(points, points[1:], strict=False):
        gain_low = low.distilled - low.injected
        gain_high = high.distilled - high.injected
        if gain_low >= 0 > gain_high:
            share = gain_low / (gain_low - gain_high)
            return low.rescale + share * (high.rescale - low.rescale)
    return None


def rescale_study(cfg: ExperimentConfig) -> RescaleSection:
    """Injected against distilled fidelity, without stabilizer postselection, per rescale."""

    ideal = ideal_channel(cfg.angles)
    reference = BlochVector.magic().rotated_z(cfg.angles[0])
    points = []
    seeds = _child_seeds(cfg.seed, len(cfg.rescale_grid))
    for factor, seed in zip(cfg.rescale_grid, seeds, strict=True):
        noise = cfg.noise_model(factor)
        injection_seed, channel_seed = _child_seeds(seed, 2)
        flips = _injection_flips(cfg, noise, injection_seed)
        injected, _ = tomography_estimate(flips.corrected, reference)
        stats = compose(_learn(cfg, noise, channel_seed, ()), ideal, ALL)
        points.append(
            RescalePoint(
                rescale=factor,
                injected=_clip(magic_fidelity(injected)),
                distilled=_clip(stats.fidelity()),
                acceptance=stats.acceptance,
            )
        )
        logger.info(
            "Rescale %.3g: injected %.4f, distilled %.4f",
            factor,
            points[-1].injected,
            points[-1].distilled,
        )
    return RescaleSection(points=points, crossing=_crossing(points))


# ---------------------------------------------------------------------------
# Small-system cross-check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossCheck:
    basis: str
    composed_acceptance: float
    dense_acceptance: float
    composed_expectation: float
    dense_expectation: float
    shots: int

    def deviation(self) -> float:
        """Largest difference in units of the sampling error of the composed values."""

        acc = self.dense_acceptance
        acc_sigma = math.sqrt(max(acc * (1 - acc), 1e-12) / self.shots)
        accepted = max(self.shots * acc, 1.0)
        exp_sigma = math.sqrt(max(1 - self.dense_expectation**2, 1e-12) / accepted)
        return max(
            abs(self.composed_acceptance - self.dense_acceptance) / acc_sigma,
            abs(self.composed_expectation - self.dense_expectation) / exp_sigma,
        )


def dense_cross_check(
    noise: NoiseModel,
    shots_per_basis: int,
    seed: int,
    angles: Sequence[float] | None = None,
) -> list[CrossCheck]:
    """Compare learned-and-composed statistics with exact noisy simulation of the bare factory."""

    code = color_code(1)
    channel = learn_channels(code, noise, shots_per_basis, "mle", (), seed)
    ideal = ideal_channel(angles)
    composed = compose(channel, ideal, ALL)
    checks = []
    for basis in BASES:
        circuit = build_factory_circuit(code, angles, basis)
        acceptance, expectation = outcome_statistics(noisy_dense_distribution(circuit, noise))
        stats = composed.per_basis[basis]
        checks.append(
            CrossCheck(
                basis,
                stats.acceptance,
                acceptance,
                stats.expectation,
                expectation,
                shots_per_basis,
            )
        )
    return checks


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------


def bench(cfg: ExperimentConfig, *, max_syndromes: int = 2000) -> BenchSection:
    """Sampler throughput and MLE latency on the factory's detector model."""

    circuit = build_factory_circuit(color_code(cfg.distance), cfg.angles, "Z", source=cfg.source)
    model = instrument(circuit, cfg.noise_model())
    shots = cfg.shots_per_basis
    start = time.perf_counter()
    batch: ShotBatch = sample(model, shots, cfg.seed)
    sample_seconds = time.perf_counter() - start

    keys = np.unique(batch.syndrome_keys())[:max_syndromes]
    decoder = MleDecoder(model)
    start = time.perf_counter()
    for key in keys.tolist():
        decoder.decode_key(int(key))
    decode_seconds = time.perf_counter() - start
    logger.info(
        "Sampled %d shots in %.3fs; decoded %d syndromes in %.3fs",
        shots,
        sample_seconds,
        keys.size,
        decode_seconds,
    )
    return BenchSection(
        detectors=model.n_detectors,
        mechanisms=model.m,
        sample_shots=shots,
        sample_seconds=sample_seconds,
        decode_syndromes=int(keys.size),
        decode_seconds=decode_seconds,
    )
