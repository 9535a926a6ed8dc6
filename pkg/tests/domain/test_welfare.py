"""Tests for dead-weight loss, social cost and the supremum scan."""

import numpy as np
import pytest
from hypothesis import given, settings

from pacecore.domain.costs import Allocation, ItemCoverage, ZeroOneSingleGood
from pacecore.domain.mechanisms import MechanismKind, Reports, harmonic_number, run_mechanism
from pacecore.domain.welfare import (
    ScanGrid,
    dwl,
    dwl_batch,
    dwl_forms,
    dwl_sup_scan,
    harmonic_profile,
    payments_plus_excluded,
    social_cost,
    social_cost_ratio,
)
from tests.strategies import single_good_reports


class TestDeadWeightLoss:
    """Tests for the dead-weight loss of single runs."""

    def test_harmonic_witness_for_two_agents(self, zero_one: ZeroOneSingleGood) -> None:
        """Test the loss, payments plus exclusions and social cost ratio on (1, 1/2 - ε)."""
        reports = Reports.of(harmonic_profile(2, 1e-3))

        assert dwl(MechanismKind.MOULIN, reports, zero_one) == pytest.approx(0.499)
        assert payments_plus_excluded(MechanismKind.MOULIN, reports, zero_one) == pytest.approx(1.499)
        assert social_cost_ratio(MechanismKind.MOULIN, reports, zero_one) == pytest.approx(1.499)

    def test_harmonic_profile_shape(self) -> None:
        """Test that the witness profile starts at one and sits just under 1/j."""
        np.testing.assert_allclose(harmonic_profile(3, 0.01), [1.0, 0.49, 1 / 3 - 0.01])

    def test_rejects_unbounded_reports(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that welfare measures need finite reports."""
        with pytest.raises(ValueError, match="finite reports"):
            dwl(MechanismKind.MOULIN, Reports.of([0.0, 0.5], [True, False]), zero_one)

    def test_social_cost_counts_excluded_value(self, zero_one: ZeroOneSingleGood) -> None:
        """Test cost plus excluded reports."""
        reports = Reports.of([0.8, 0.3])

        assert social_cost(reports, zero_one, Allocation.from_agents(2, [0])) == pytest.approx(1.3)
        assert social_cost(reports, zero_one, Allocation(n=2, m=1)) == pytest.approx(1.1)

    def test_social_cost_ratio_is_one_when_nothing_is_valued(self, zero_one: ZeroOneSingleGood) -> None:
        """Test the zero-over-zero convention."""
        assert social_cost_ratio(MechanismKind.MOULIN, Reports.of([0.0, 0.0]), zero_one) == 1.0

    @given(reports=single_good_reports())
    @settings(deadline=None)
    def test_proportional_has_no_loss(self, reports: Reports) -> None:
        """Test that the proportional rule never loses welfare on the 0-1 cost."""
        assert dwl(MechanismKind.PROPORTIONAL, reports, ZeroOneSingleGood()) == pytest.approx(0.0, abs=1e-9)

    @given(reports=single_good_reports())
    @settings(deadline=None)
    def test_both_forms_agree_for_moulin(self, reports: Reports) -> None:
        """Test that surplus loss equals excluded value plus payments minus one."""
        outcome = run_mechanism(MechanismKind.MOULIN, reports, ZeroOneSingleGood())

        surplus_form, excess_form = dwl_forms(reports, outcome)

        assert surplus_form == pytest.approx(excess_form, abs=1e-9)

    @given(reports=single_good_reports(max_agents=4))
    @settings(deadline=None)
    def test_moulin_loss_stays_below_harmonic_bound(self, reports: Reports) -> None:
        """Test the H_n - 1 bound on every profile."""
        loss = dwl(MechanismKind.MOULIN, reports, ZeroOneSingleGood())

        assert loss <= harmonic_number(reports.n) - 1.0 + 1e-9


class TestDwlBatch:
    """Tests for the vectorized dead-weight loss."""

    def test_batch_matches_single_runs(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that the batch form agrees with per-profile evaluation."""
        profiles = np.asarray([[0.6, 0.6, 0.2], [1.0, 0.49, 0.3], [0.1, 0.1, 0.1]])[:, :, None]

        losses = dwl_batch(MechanismKind.MOULIN, profiles, zero_one)

        expected = [dwl(MechanismKind.MOULIN, Reports.of(row), zero_one) for row in profiles]
        np.testing.assert_allclose(losses, expected, atol=1e-9)

    def test_multi_good_loss_is_nonnegative(self) -> None:
        """Test the normalized loss under item coverage."""
        cost = ItemCoverage(weights=(0.6, 0.6), cap=1.0)
        rng = np.random.default_rng(3)

        losses = dwl_batch(MechanismKind.POTENTIAL, rng.random((64, 2, 2)), cost)

        assert np.all(losses >= 0.0)


class TestSupremumScan:
    """Tests for the supremum search."""

    def test_moulin_reaches_harmonic_bound(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that the exhaustive scan for three agents finds H_3 - 1."""
        scan = dwl_sup_scan(MechanismKind.MOULIN, 3, 1, zero_one)

        assert scan.exhaustive
        assert harmonic_number(3) - 1.0 - 0.01 <= scan.sup_estimate <= harmonic_number(3) - 1.0 + 1e-9
        assert scan.upper_bound == pytest.approx(harmonic_number(3) - 1.0)
        assert scan.payments_plus_excluded == pytest.approx(scan.sup_estimate + 1.0, abs=1e-9)

    def test_proportional_scan_finds_no_loss(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that the proportional supremum is zero."""
        scan = dwl_sup_scan(MechanismKind.PROPORTIONAL, 3, 1, zero_one)

        assert scan.sup_estimate == pytest.approx(0.0, abs=1e-12)
        assert scan.upper_bound == 0.0

    def test_sampled_scan_is_reproducible(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that a sampled scan depends only on the seed."""
        grid = ScanGrid(resolution=20, samples=500, max_grid_points=100)

        first = dwl_sup_scan(MechanismKind.MOULIN, 4, 1, zero_one, grid, seed=9)
        second = dwl_sup_scan(MechanismKind.MOULIN, 4, 1, zero_one, grid, seed=9)

        assert not first.exhaustive
        assert first.sup_estimate == second.sup_estimate
        np.testing.assert_array_equal(first.witness.values, second.witness.values)

    def test_rejects_empty_grid(self) -> None:
        """Test grid validation."""
        with pytest.raises(ValueError, match="Scan grid"):
            ScanGrid(resolution=0)
