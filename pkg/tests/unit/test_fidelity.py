"""Unit tests for src/channel/fidelity.py."""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.channel.fidelity import (
    BasisCounts,
    bayes_interval,
    input_fidelity,
    magic_fidelity,
    posterior,
    sample_ball,
    tomography_estimate,
)
from src.exceptions import ChannelError, EmptyBasisError
from src.pauli.bloch import BlochVector


class TestMagicFidelity:
    def test_magic_state_has_unit_fidelity(self) -> None:
        assert magic_fidelity(BlochVector.magic()) == pytest.approx(1.0)

    def test_maximally_mixed_state(self) -> None:
        assert magic_fidelity(np.zeros(3)) == pytest.approx(0.5)

    def test_antipodal_state(self) -> None:
        assert magic_fidelity(-BlochVector.magic().as_array()) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("theta", [0.0, 0.1, 0.5, math.pi / 2, math.pi])
    def test_input_fidelity_matches_rotated_vector(self, theta: float) -> None:
        rotated = BlochVector.magic().rotated_z(theta)
        assert input_fidelity(theta) == pytest.approx(magic_fidelity(rotated))

    def test_input_fidelity_endpoints(self) -> None:
        assert input_fidelity(0.0) == pytest.approx(1.0)
        assert input_fidelity(math.pi) == pytest.approx(1 / 3)


class TestBasisCounts:
    def test_expectation(self) -> None:
        assert BasisCounts(10, 8).expectation == pytest.approx(0.6)
        assert BasisCounts(0, 0).expectation == 0.0

    def test_from_expectation_round_trips(self) -> None:
        counts = BasisCounts.from_expectation(40, -0.5)
        assert counts.m == pytest.approx(10)
        assert counts.expectation == pytest.approx(-0.5)

    @pytest.mark.parametrize(("n", "m"), [(-1, 0), (5, 6), (5, -1)])
    def test_invalid_counts(self, n: float, m: float) -> None:
        with pytest.raises(ChannelError, match="0 <= m <= n"):
            BasisCounts(n, m)


# ---------------------------------------------------------------------------
# Tomography
# ---------------------------------------------------------------------------


class TestTomography:
    def test_flip_rates_set_components(self) -> None:
        flips = {
            "X": np.zeros(4, dtype=np.uint8),
            "Y": np.array([0, 1], dtype=np.uint8),
            "Z": np.array([1, 0, 0, 1], dtype=np.uint8),
        }
        vector, counts = tomography_estimate(flips)
        np.testing.assert_allclose(vector.as_array(), [1.0, 0.0, 0.0])
        assert counts["X"] == BasisCounts(4, 4)
        assert counts["Y"].n == 2

    def test_reference_scales_components(self) -> None:
        flips = {basis: np.zeros(8, dtype=np.uint8) for basis in "XYZ"}
        vector, _ = tomography_estimate(flips, BlochVector.magic())
        assert magic_fidelity(vector) == pytest.approx(1.0)

    def test_flipped_reference_component(self) -> None:
        flips = {
            "X": np.ones(4, dtype=np.uint8),
            "Y": np.zeros(4, dtype=np.uint8),
            "Z": np.zeros(4, dtype=np.uint8),
        }
        vector, counts = tomography_estimate(flips, BlochVector.magic())
        assert vector.x == pytest.approx(-1 / math.sqrt(3))
        assert counts["X"].m == pytest.approx(4 * (1 - 1 / math.sqrt(3)) / 2)

    def test_missing_basis_raises(self) -> None:
        flips = {"X": np.zeros(2, dtype=np.uint8), "Y": np.zeros(2, dtype=np.uint8)}
        with pytest.raises(EmptyBasisError):
            tomography_estimate(flips)


# ---------------------------------------------------------------------------
# Posterior
# ---------------------------------------------------------------------------


class TestSampleBall:
    def test_points_lie_in_ball(self) -> None:
        points = sample_ball(5_000, np.random.default_rng(3))
        assert points.shape == (5_000, 3)
        assert np.all(np.linalg.norm(points, axis=1) <= 1.0)

    def test_zero_samples(self) -> None:
        assert sample_ball(0, np.random.default_rng(0)).shape == (0, 3)

    def test_points_fill_the_ball(self) -> None:
        points = sample_ball(20_000, np.random.default_rng(4))
        # Uniform in the ball: E|r|^2 = 3/5.
        assert np.mean(np.sum(points**2, axis=1)) == pytest.approx(0.6, abs=0.01)


class TestPosterior:
    def test_flat_prior_is_centered(self) -> None:
        post = posterior({}, samples=20_000, seed=1)
        assert post.mean_fidelity() == pytest.approx(0.5, abs=0.01)
        assert post.weights.sum() == pytest.approx(1.0)

    def test_same_seed_same_posterior(self) -> None:
        counts = {"X": (20, 15), "Y": (20, 14), "Z": (20, 16)}
        first = posterior(counts, samples=5_000, seed=7)
        second = posterior(counts, samples=5_000, seed=7)
        np.testing.assert_array_equal(first.points, second.points)
        assert first.median() == second.median()

    def test_data_pulls_posterior_toward_evidence(self) -> None:
        good = {"X": (50, 38), "Y": (50, 38), "Z": (50, 38)}
        bad = {"X": (50, 12), "Y": (50, 12), "Z": (50, 12)}
        good_post = posterior(good, samples=50_000, seed=2)
        bad_post = posterior(bad, samples=50_000, seed=2)
        assert good_post.median() > 0.75
        assert bad_post.median() < 0.25
        assert np.all(good_post.mean_vector().as_array() > 0)

    def test_interval_brackets_median(self) -> None:
        counts = {"X": BasisCounts(30, 20), "Y": BasisCounts(30, 21), "Z": BasisCounts(30, 19)}
        median, (lo, hi) = bayes_interval(counts, samples=20_000, seed=5)
        assert 0.0 <= lo <= median <= hi <= 1.0

    def test_effective_samples_bounded(self) -> None:
        post = posterior({"Z": (10, 9)}, samples=4_000, seed=3)
        assert 1.0 <= post.effective_samples() <= 4_000

    def test_large_counts_keep_many_effective_samples(self) -> None:
        truth = np.array([0.5, 0.5, 0.5])
        counts = {
            basis: BasisCounts.from_expectation(50_000, float(v))
            for basis, v in zip("XYZ", truth, strict=True)
        }
        post = posterior(counts, samples=20_000, seed=11)
        assert post.effective_samples() > 1_000
        lo, hi = post.interval()
        assert lo < magic_fidelity(truth) < hi
        assert 0.001 < hi - lo < 0.01

    def test_counts_beyond_the_ball_stay_usable(self) -> None:
        counts = {basis: BasisCounts(50_000, 10_000) for basis in "XYZ"}
        post = posterior(counts, samples=20_000, seed=1)
        assert post.effective_samples() > 100
        assert np.all(np.einsum("ij,ij->i", post.points, post.points) <= 1.0)
        assert post.median() < magic_fidelity(np.full(3, -0.55))

    def test_sharded_sampling(self) -> None:
        post = posterior({}, samples=(1 << 16) + 10, seed=0)
        assert post.points.shape == ((1 << 16) + 10, 3)

    def test_quantile_range_checked(self) -> None:
        post = posterior({}, samples=100, seed=0)
        with pytest.raises(ChannelError, match=r"\[0, 1\]"):
            post.quantile(1.5)

    def test_needs_samples(self) -> None:
        with pytest.raises(ChannelError, match="at least one sample"):
            posterior({}, samples=0)
