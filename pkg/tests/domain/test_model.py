"""Tests for instances, distributions and samplers."""

import numpy as np
import pytest

from pacecore.domain.costs import ConcaveCardinality, ZeroOneSingleGood
from pacecore.domain.errors import ConfigurationError
from pacecore.domain.model import (
    Atom,
    Box,
    DistributionSpec,
    Instance,
    PermutedAtom,
    SamplingMethod,
    sample_batch,
    sample_round,
)
from pacecore.domain.randomness import substream


def _two_atoms(perturbation: float = 0.0) -> DistributionSpec:
    return DistributionSpec(
        n=2,
        m=1,
        components=(
            Atom(probability=0.25, values=((1.0,), (0.0,))),
            Atom(probability=0.75, values=((0.2,), (0.6,))),
        ),
        costs=(ZeroOneSingleGood(),),
        perturbation_eps=perturbation,
    )


class TestDistributionSpec:
    """Tests for validating value distributions."""

    def test_rejects_probabilities_not_summing_to_one(self) -> None:
        """Test the probability total check."""
        with pytest.raises(ConfigurationError, match="sum to"):
            DistributionSpec(
                n=1,
                m=1,
                components=(Atom(probability=0.5, values=((1.0,),)),),
                costs=(ZeroOneSingleGood(),),
            )

    def test_rejects_values_outside_unit_interval(self) -> None:
        """Test that atom values must lie in [0, 1]."""
        with pytest.raises(ConfigurationError, match=r"\[0, 1\]"):
            DistributionSpec(
                n=1,
                m=1,
                components=(Atom(probability=1.0, values=((1.5,),)),),
                costs=(ZeroOneSingleGood(),),
            )

    def test_rejects_inverted_box(self) -> None:
        """Test that box intervals need low <= high."""
        with pytest.raises(ConfigurationError, match="low <= high"):
            DistributionSpec(
                n=1,
                m=1,
                components=(Box(probability=1.0, low=((0.6,),), high=((0.4,),)),),
                costs=(ZeroOneSingleGood(),),
            )

    def test_rejects_unknown_cost_reference(self) -> None:
        """Test that every component must point at a defined cost."""
        with pytest.raises(ConfigurationError, match="refers to cost 1"):
            DistributionSpec(
                n=1,
                m=1,
                components=(Atom(probability=1.0, values=((0.5,),), cost_id=1),),
                costs=(ZeroOneSingleGood(),),
            )

    def test_rejects_cost_that_does_not_fit_shape(self) -> None:
        """Test that costs are checked against (n, m)."""
        with pytest.raises(ConfigurationError, match="Cardinality table"):
            DistributionSpec(
                n=2,
                m=2,
                components=(Atom(probability=1.0, values=((0.5, 0.5), (0.5, 0.5))),),
                costs=(ConcaveCardinality(steps=(0.0, 0.6, 1.0)),),
            )

    def test_permuted_atom_needs_one_base_value_per_agent(self) -> None:
        """Test the permuted-atom base length."""
        with pytest.raises(ConfigurationError, match="base values"):
            DistributionSpec(
                n=3,
                m=1,
                components=(PermutedAtom(probability=1.0, base=(1.0, 0.5)),),
                costs=(ZeroOneSingleGood(),),
            )

    def test_continuity_depends_on_perturbation(self) -> None:
        """Test that atoms have a density only when smoothed."""
        assert _two_atoms(1e-4).is_continuous
        assert not _two_atoms(0.0).is_continuous

    def test_zero_one_detection(self) -> None:
        """Test the single-good 0-1 flag."""
        assert _two_atoms().has_only_zero_one_costs


class TestInstance:
    """Tests for validating instances."""

    def test_rejects_shares_above_one(self) -> None:
        """Test that shares may not sum beyond one."""
        with pytest.raises(ConfigurationError, match="exceeds 1"):
            Instance(n=2, m=1, horizon=10, shares=(0.6, 0.6), dist=_two_atoms())

    def test_rejects_nonpositive_share(self) -> None:
        """Test that every share must be positive."""
        with pytest.raises(ConfigurationError, match="positive"):
            Instance(n=2, m=1, horizon=10, shares=(0.5, 0.0), dist=_two_atoms())

    def test_rejects_distribution_of_other_shape(self) -> None:
        """Test the instance and distribution shapes must agree."""
        with pytest.raises(ConfigurationError, match="Distribution is over"):
            Instance(n=3, m=1, horizon=10, shares=(0.1, 0.1, 0.1), dist=_two_atoms())

    def test_alpha_is_share_total(self) -> None:
        """Test the total share."""
        instance = Instance(n=2, m=1, horizon=10, shares=(0.25, 0.5), dist=_two_atoms())

        assert instance.alpha == pytest.approx(0.75)


class TestSampling:
    """Tests for drawing rounds."""

    def test_same_substream_reproduces_draws(self) -> None:
        """Test that sampling is a pure function of the generator state."""
        dist = _two_atoms(1e-4)

        first = sample_batch(dist, substream(7, "sampling", 0), 500)
        second = sample_batch(dist, substream(7, "sampling", 0), 500)

        np.testing.assert_array_equal(first.values, second.values)
        np.testing.assert_array_equal(first.cost_ids, second.cost_ids)

    def test_different_replications_differ(self) -> None:
        """Test that replication indices select independent streams."""
        dist = _two_atoms(1e-4)

        first = sample_batch(dist, substream(7, "sampling", 0), 100)
        second = sample_batch(dist, substream(7, "sampling", 1), 100)

        assert not np.array_equal(first.values, second.values)

    def test_mixture_frequencies_match_probabilities(self) -> None:
        """Test that components are chosen with their probabilities."""
        draws = sample_batch(_two_atoms(), substream(1, "sampling"), 40_000)

        first = np.isclose(draws.values[:, 0, 0], 1.0)
        assert first.mean() == pytest.approx(0.25, abs=0.02)
        np.testing.assert_array_equal(draws.values[~first, 1, 0], 0.6)

    def test_perturbation_stays_within_width_and_range(self) -> None:
        """Test that smoothing adds at most ε and values stay in [0, 1]."""
        draws = sample_batch(_two_atoms(0.01), substream(2, "sampling"), 5_000)
        low = draws.values[:, 1, 0] < 0.5

        assert np.all(draws.values >= 0.0)
        assert np.all(draws.values <= 1.0)
        assert np.all(draws.values[low, 1, 0] <= 0.01)
        assert np.all(draws.values[~low, 1, 0] >= 0.6)

    def test_box_values_stay_inside_intervals(self) -> None:
        """Test that box draws respect their intervals."""
        dist = DistributionSpec(
            n=2,
            m=1,
            components=(Box(probability=1.0, low=((0.2,), (0.0,)), high=((0.4,), (1.0,))),),
            costs=(ZeroOneSingleGood(),),
        )

        draws = sample_batch(dist, substream(3, "sampling"), 2_000)

        assert np.all((draws.values[:, 0, 0] >= 0.2) & (draws.values[:, 0, 0] <= 0.4))

    def test_permuted_atom_deals_every_base_value(self) -> None:
        """Test that each draw is a permutation of the base values."""
        base = (0.9, 0.45, 0.3)
        dist = DistributionSpec(
            n=3,
            m=1,
            components=(PermutedAtom(probability=1.0, base=base),),
            costs=(ZeroOneSingleGood(),),
            perturbation_eps=0.0,
        )

        draws = sample_batch(dist, substream(4, "sampling"), 3_000)

        np.testing.assert_array_equal(np.sort(draws.values[:, :, 0], axis=1), np.tile(sorted(base), (3_000, 1)))
        assert draws.values[:, 0, 0].mean() == pytest.approx(np.mean(base), abs=0.03)

    def test_sobol_batches_round_up_to_power_of_two(self) -> None:
        """Test the scrambled Sobol batch size."""
        draws = sample_batch(_two_atoms(1e-4), substream(5, "solver"), 1_000, method=SamplingMethod.SOBOL)

        assert len(draws) == 1_024

    def test_rejects_empty_batch(self) -> None:
        """Test that batch sizes must be positive."""
        with pytest.raises(ValueError, match="positive"):
            sample_batch(_two_atoms(), substream(0, "sampling"), 0)

    def test_sample_round_returns_read_only_profile(self) -> None:
        """Test one round's profile."""
        profile = sample_round(_two_atoms(1e-4), substream(6, "sampling"))

        assert profile.values.shape == (2, 1)
        assert not profile.values.flags.writeable
        assert profile.cost.kind == ZeroOneSingleGood().kind
