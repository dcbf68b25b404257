"""Magic-state fidelity, Bloch estimates from decoded records and Bayesian intervals."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from src.config import config
from src.exceptions import ChannelError, DegeneratePosteriorError, EmptyBasisError
from src.pauli.bloch import BlochVector

logger = logging.getLogger(__name__)

__all__ = [
    "BasisCounts",
    "Posterior",
    "bayes_interval",
    "input_fidelity",
    "magic_fidelity",
    "posterior",
    "sample_ball",
    "tomography_estimate",
]

_BASES = ("X", "Y", "Z")
_SHARD_SAMPLES = 1 << 16
_PROPOSAL_WIDTH = 2.0
_UNIFORM_SHARE = 0.1
_BALL_DENSITY = 3 / (4 * math.pi)


def magic_fidelity(v: BlochVector | np.ndarray) -> float:
    """Overlap with the magic state ``(1, 1, 1)/sqrt(3)``: ``1/2 + (x + y + z)/(2 sqrt 3)``."""

    vector = v if isinstance(v, BlochVector) else BlochVector.from_array(v)
    return 0.5 + (vector.x + vector.y + vector.z) / (2 * math.sqrt(3))


def input_fidelity(theta: float) -> float:
    """Fidelity of a magic state after ``RZ(theta)``: ``1/2 + (2 cos(theta) + 1)/6``."""

    return 0.5 + (2 * math.cos(theta) + 1) / 6


@dataclass(frozen=True)
class BasisCounts:
    """``n`` measured shots of which ``m`` gave the +1 eigenvalue; effective counts may be real."""

    n: float
    m: float

    def __post_init__(self) -> None:
        if self.n < 0 or not -1e-9 <= self.m <= self.n + 1e-9:
            raise ChannelError(f"Counts must satisfy 0 <= m <= n, got n={self.n}, m={self.m}")

    @classmethod
    def from_expectation(cls, n: float, expectation: float) -> BasisCounts:
        return cls(n, n * (1 + expectation) / 2)

    @property
    def expectation(self) -> float:
        return 2 * self.m / self.n - 1 if self.n else 0.0


# ---------------------------------------------------------------------------
# Tomography
# ---------------------------------------------------------------------------


def tomography_estimate(
    flips: Mapping[str, np.ndarray], reference: BlochVector | None = None
) -> tuple[BlochVector, dict[str, BasisCounts]]:
    """Bloch vector from per-basis logical flip records.

    ``flips[b]`` holds one bit per decoded shot, 1 where the logical outcome
    differs from the target eigenvalue. Component ``b`` is
    ``(1 - 2 q_b) * reference_b`` with ``q_b`` the flip rate; without a
    reference the target is the +1 eigenstate of every basis.
    """

    components = []
    counts: dict[str, BasisCounts] = {}
    for basis in _BASES:
        records = np.asarray(flips.get(basis, ()), dtype=np.uint8)
        if records.size == 0:
            raise EmptyBasisError(basis)
        rate = float(records.mean())
        target = 1.0 if reference is None else reference.component(basis)
        component = (1 - 2 * rate) * target
        components.append(component)
        counts[basis] = BasisCounts.from_expectation(records.size, component)
    vector = BlochVector(*components)
    logger.debug("Tomography estimate %s from %s shots", vector, [c.n for c in counts.values()])
    return vector, counts


# ---------------------------------------------------------------------------
# Bayesian posterior over the Bloch ball
# ---------------------------------------------------------------------------


def sample_ball(samples: int, rng: np.random.Generator) -> np.ndarray:
    """``samples`` points uniform in the unit ball, by rejection from the cube."""

    accepted: list[np.ndarray] = [np.empty((0, 3))]
    total = 0
    while total < samples:
        # About 52% of the cube lies in the ball.
        draw = rng.uniform(-1.0, 1.0, size=(2 * (samples - total) + 16, 3))
        inside = draw[np.einsum("ij,ij->i", draw, draw) <= 1.0]
        accepted.append(inside)
        total += inside.shape[0]
    return np.concatenate(accepted)[:samples]


def _log_likelihood(points: np.ndarray, counts: Mapping[str, BasisCounts]) -> np.ndarray:
    log_weights = np.zeros(points.shape[0])
    for axis, basis in enumerate(_BASES):
        c = counts.get(basis)
        if c is None or c.n == 0:
            continue
        v = points[:, axis]
        log_weights += xlogy(c.m, (1 + v) / 2) + xlogy(c.n - c.m, (1 - v) / 2)
    return log_weights


@dataclass(frozen=True, eq=False)
class _Proposal:
    """Gaussian around the smoothed per-axis estimate, mixed with a uniform share of the ball.

    The uniform share bounds every importance weight inside the ball.
    """

    center: np.ndarray
    scale: np.ndarray

    @classmethod
    def from_counts(cls, counts: Mapping[str, BasisCounts]) -> _Proposal:
        center = np.zeros(3)
        scale = np.ones(3)
        for axis, basis in enumerate(_BASES):
            c = counts.get(basis)
            if c is None or c.n == 0:
                continue
            p = (c.m + 1) / (c.n + 2)
            center[axis] = 2 * p - 1
            scale[axis] = 2 * math.sqrt(p * (1 - p) / (c.n + 2))
        norm = float(np.linalg.norm(center))
        if norm > 1:
            center /= norm
        return cls(center, _PROPOSAL_WIDTH * scale)

    def draw(self, size: int, rng: np.random.Generator) -> np.ndarray:
        uniform = int(rng.binomial(size, _UNIFORM_SHARE))
        gaussian = rng.normal(self.center, self.scale, size=(size - uniform, 3))
        return np.concatenate([sample_ball(uniform, rng), gaussian])

    def log_density(self, points: np.ndarray) -> np.ndarray:
        """Mixture density, valid for points inside the ball."""

        z = (points - self.center) / self.scale
        norm = (2 * math.pi) ** 1.5 * float(np.prod(self.scale))
        gaussian = np.exp(-0.5 * np.einsum("ij,ij->i", z, z)) / norm
        return np.log((1 - _UNIFORM_SHARE) * gaussian + _UNIFORM_SHARE * _BALL_DENSITY)


def _weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    order = np.argsort(values)
    ordered = values[order]
    cumulative = np.cumsum(weights[order])
    cumulative /= cumulative[-1]
    index = int(np.searchsorted(cumulative, q, side="left"))
    return float(ordered[min(index, ordered.size - 1)])


@dataclass(frozen=True, eq=False)
class Posterior:
    """Weighted Bloch-ball samples; weights sum to one."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def fidelities(self) -> np.ndarray:
        return 0.5 + self.points.sum(axis=1) / (2 * math.sqrt(3))

    def mean_fidelity(self) -> float:
        return float(np.dot(self.weights, self.fidelities))

    def mean_vector(self) -> BlochVector:
        return BlochVector.from_array(self.weights @ self.points)

    def quantile(self, q: float) -> float:
        if not 0 <= q <= 1:
            raise ChannelError(f"Quantile must lie in [0, 1], got {q}")
        value = _weighted_quantile(self.fidelities, self.weights, q)
        return min(1.0, max(0.0, value))

    def median(self) -> float:
        return self.quantile(0.5)

    def interval(self, low: float = 0.16, high: float = 0.84) -> tuple[float, float]:
        return self.quantile(low), self.quantile(high)

    def effective_samples(self) -> float:
        return float(1.0 / np.sum(self.weights**2))


def _shard(
    size: int,
    rng: np.random.Generator,
    counts: Mapping[str, BasisCounts],
    proposal: _Proposal | None,
) -> tuple[np.ndarray, np.ndarray]:
    if proposal is None:
        return sample_ball(size, rng), np.zeros(size)
    points = proposal.draw(size, rng)
    points = points[np.einsum("ij,ij->i", points, points) <= 1.0]
    return points, _log_likelihood(points, counts) - proposal.log_density(points)


def posterior(
    counts: Mapping[str, BasisCounts | tuple[float, float]],
    samples: int | None = None,
    seed: int = 0,
) -> Posterior:
    """Posterior over the Bloch ball under a uniform prior and Bernoulli basis counts.

    Draws come from a proposal concentrated where the counts put the state and
    are weighted by likelihood over proposal density; draws outside the ball
    carry no prior mass and are dropped. Without counts the draws are uniform
    in the ball. Samples are drawn in independent shards (one child seed
    each) and their log weights normalized together.
    """

    total = samples if samples is not None else config.posterior_samples
    if total < 1:
        raise ChannelError("Posterior needs at least one sample")
    resolved = {
        basis: value if isinstance(value, BasisCounts) else BasisCounts(*value)
        for basis, value in counts.items()
    }
    informative = any(c.n > 0 for c in resolved.values())
    proposal = _Proposal.from_counts(resolved) if informative else None
    sizes = [_SHARD_SAMPLES] * (total // _SHARD_SAMPLES)
    if total % _SHARD_SAMPLES:
        sizes.append(total % _SHARD_SAMPLES)
    shards = [
        _shard(size, np.random.default_rng(child), resolved, proposal)
        for size, child in zip(sizes, np.random.SeedSequence(seed).spawn(len(sizes)), strict=True)
    ]
    points = np.concatenate([p for p, _ in shards])
    log_weights = np.concatenate([w for _, w in shards])

    peak = float(np.max(log_weights)) if log_weights.size else -math.inf
    if not math.isfinite(peak):
        raise DegeneratePosteriorError("Every posterior sample has zero likelihood")
    weights = np.exp(log_weights - peak)
    weights /= weights.sum()
    result = Posterior(points, weights)
    logger.debug(
        "Posterior from %d draws, %d in the ball (effective %.0f)",
        total,
        points.shape[0],
        result.effective_samples(),
    )
    return result


def bayes_interval(
    counts: Mapping[str, BasisCounts | tuple[float, float]],
    samples: int | None = None,
    seed: int = 0,
) -> tuple[float, tuple[float, float]]:
    """Posterior median fidelity and the central 68% credible interval."""

    post = posterior(counts, samples, seed)
    return post.median(), post.interval()
