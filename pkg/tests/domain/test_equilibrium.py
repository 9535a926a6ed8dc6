"""Tests for spend estimation, the pacing solver and focal checks."""

import math

import numpy as np
import pytest

from pacecore.domain.costs import ZeroOneSingleGood
from pacecore.domain.equilibrium import (
    NonConvergenceError,
    PacingProfile,
    SpendOracle,
    estimate_spend,
    focal_threshold,
    scaled_reports,
    solve_pacing,
    verify_focal,
)
from pacecore.domain.errors import ConfigurationError
from pacecore.domain.mechanisms import MechanismKind
from pacecore.domain.model import Atom, DistributionSpec, Instance
from pacecore.domain.randomness import substream

SMALL_SCHEDULE = (4_096, 16_384)


class TestSpend:
    """Tests for spend estimates."""

    def test_uniform_agent_spends_one_minus_beta(self, uniform_agent: Instance) -> None:
        """Test that a Uniform[0, 1] agent under Moulin spends P(V >= β)."""
        estimate = estimate_spend(uniform_agent, MechanismKind.MOULIN, [0.3], 20_000)

        assert estimate.mean[0] == pytest.approx(0.7, abs=0.02)
        assert 0 < estimate.half_width[0] < 0.02
        assert estimate.samples == 20_000

    def test_unbounded_agent_pays_every_round(self, uniform_agent: Instance) -> None:
        """Test that β = 0 pays the full cost in every round."""
        estimate = estimate_spend(uniform_agent, MechanismKind.MOULIN, [0.0], 2_000)

        assert estimate.mean[0] == pytest.approx(1.0)
        assert estimate.half_width[0] == pytest.approx(0.0)

    def test_rejects_small_sample(self, uniform_agent: Instance) -> None:
        """Test the minimum sample size."""
        with pytest.raises(ValueError, match="at least 1000"):
            estimate_spend(uniform_agent, MechanismKind.MOULIN, [0.5], 999)

    def test_rejects_wrong_length_profile(self, uniform_agent: Instance) -> None:
        """Test that the pacing vector has one entry per agent."""
        with pytest.raises(ConfigurationError, match="Pacing vector"):
            estimate_spend(uniform_agent, MechanismKind.MOULIN, [0.5, 0.5])

    def test_oracle_spend_is_monotone_in_own_beta(self, symmetric_pair: Instance) -> None:
        """Test that common random numbers make spend non-increasing in β_i."""
        oracle = SpendOracle(symmetric_pair, MechanismKind.MOULIN, 2_048, substream(1, "solver", 0))

        spends = [oracle.spend(np.asarray([beta, 0.5]))[0] for beta in (0.2, 0.4, 0.6, 0.8)]

        assert spends == sorted(spends, reverse=True)
        assert oracle.evaluations == 4

    def test_scaled_reports_flag_zero_beta(self) -> None:
        """Test the value-scaling transform of a batch."""
        values = np.asarray([[[0.2], [0.4]]])

        reports, unbounded = scaled_reports(values, np.asarray([0.5, 0.0]))

        np.testing.assert_allclose(reports[0, :, 0], [0.4, 0.0])
        np.testing.assert_array_equal(unbounded[0, :, 0], [False, True])


class TestSolvePacing:
    """Tests for the pacing solver."""

    def test_uniform_agent_paces_at_half(self, uniform_agent: Instance) -> None:
        """Test that share 1/2 gives β* = 1/2 for a Uniform[0, 1] agent."""
        profile = solve_pacing(uniform_agent, MechanismKind.MOULIN, tol=2e-3, schedule=SMALL_SCHEDULE)

        assert profile.converged
        assert profile.beta[0] == pytest.approx(0.5, abs=5e-3)
        assert profile.residuals[0] <= 2e-3
        assert profile.samples == 16_384

    def test_symmetric_agents_get_equal_factors(self, symmetric_pair: Instance) -> None:
        """Test that identical agents end with nearly equal scaling factors."""
        profile = solve_pacing(symmetric_pair, MechanismKind.MOULIN, tol=2e-3, schedule=SMALL_SCHEDULE)

        assert profile.beta[0] == pytest.approx(profile.beta[1], abs=0.02)
        np.testing.assert_allclose(profile.spend, symmetric_pair.shares, atol=2e-3)

    def test_exhausted_sweeps_raise_with_last_iterate(self, uniform_agent: Instance) -> None:
        """Test that the error carries the profile reached so far."""
        with pytest.raises(NonConvergenceError) as exc_info:
            solve_pacing(uniform_agent, MechanismKind.MOULIN, max_iters=0, schedule=(4_096,))

        assert exc_info.value.profile.iterations == 0
        assert not exc_info.value.profile.converged

    def test_rejects_atomic_distribution(self) -> None:
        """Test that unsmoothed atoms are refused."""
        dist = DistributionSpec(
            n=1,
            m=1,
            components=(Atom(probability=1.0, values=((0.6,),)),),
            costs=(ZeroOneSingleGood(),),
            perturbation_eps=0.0,
        )
        instance = Instance(n=1, m=1, horizon=100, shares=(0.5,), dist=dist)

        with pytest.raises(ConfigurationError, match="continuous value distribution"):
            solve_pacing(instance, MechanismKind.MOULIN)

    def test_fixed_profile_is_marked_converged(self) -> None:
        """Test wrapping a given pacing vector."""
        profile = PacingProfile.fixed([0.5, 0.25])

        assert profile.converged
        np.testing.assert_array_equal(profile.beta, [0.5, 0.25])


class TestFocal:
    """Tests for the focal-equilibrium check."""

    def test_threshold_formula(self) -> None:
        """Test T - 2·sqrt(T)·ln T."""
        assert focal_threshold(10_000) == pytest.approx(10_000 - 200 * math.log(10_000))

    def test_paced_agent_does_not_deplete_early(self, uniform_agent: Instance) -> None:
        """Test that the equilibrium scaling spends about its budget without early depletion."""
        report = verify_focal(uniform_agent, MechanismKind.MOULIN, [0.5], 4)

        assert report.early_depletion_fraction == 0.0
        assert report.spend_ratio[0] == pytest.approx(1.0, abs=0.05)
        assert report.runs == 4

    def test_aggressive_agent_depletes_early(self, uniform_agent: Instance) -> None:
        """Test that over-reporting exhausts the budget before the threshold."""
        report = verify_focal(uniform_agent, MechanismKind.MOULIN, [0.1], 3)

        assert report.early_depletion_fraction == 1.0
        assert report.threshold == pytest.approx(focal_threshold(2_000))

    def test_rejects_zero_runs(self, uniform_agent: Instance) -> None:
        """Test the run count check."""
        with pytest.raises(ValueError, match="at least one run"):
            verify_focal(uniform_agent, MechanismKind.MOULIN, [0.5], 0)

    def test_symmetric_proportional_pair_spends_budget_without_early_depletion(self, symmetric_pair: Instance) -> None:
        """Test that truthful reports are focal for two uniform agents with shares 1/4 under proportional sharing."""
        report = verify_focal(symmetric_pair, MechanismKind.PROPORTIONAL, [1.0, 1.0], 8)

        assert report.early_depletion_fraction == 0.0
        np.testing.assert_allclose(report.spend_ratio, 1.0, atol=0.05)
        assert report.runs == 8
