"""Tests for the Proportional, Moulin and Potential mechanisms."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pacecore.domain.costs import (
    Allocation,
    ConcaveCardinality,
    CostFunction,
    ExplicitTable,
    ItemCoverage,
    ZeroOneSingleGood,
    cost_table,
    eval_cost,
)
from pacecore.domain.errors import KindMismatchError
from pacecore.domain.mechanisms import (
    MechanismKind,
    Reports,
    harmonic_number,
    mechanism_for,
    p_max,
    potential_table,
    potential_value,
    run_batch,
    run_mechanism,
)
from tests.strategies import cardinality_costs, coverage_costs, flagged_reports, report_matrices, single_good_reports


class TestReports:
    """Tests for the report value object."""

    def test_vector_becomes_single_good_column(self) -> None:
        """Test that a 1-D report vector is read as one good."""
        reports = Reports.of([0.2, 0.4, 0.6])

        assert (reports.n, reports.m) == (3, 1)
        assert not reports.values.flags.writeable

    def test_rejects_negative_reports(self) -> None:
        """Test that reports must be nonnegative."""
        with pytest.raises(ValueError, match="finite and nonnegative"):
            Reports.of([0.5, -0.1])

    def test_unbounded_entries_carry_zero(self) -> None:
        """Test that flagged entries never hold a finite value."""
        reports = Reports.of([0.7, 0.3], [True, False])

        assert reports.values[0, 0] == 0.0
        assert reports.unbounded[0, 0]

    def test_with_agent_replaces_one_row(self) -> None:
        """Test swapping one agent's report."""
        reports = Reports.of([0.2, 0.4]).with_agent(1, [0.9])

        np.testing.assert_array_equal(reports.values[:, 0], [0.2, 0.9])


class TestProportional:
    """Tests for the proportional mechanism."""

    def test_serves_all_when_reports_cover_cost(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that payments split the unit cost in proportion to reports."""
        outcome = run_mechanism(MechanismKind.PROPORTIONAL, Reports.of([0.6, 0.6]), zero_one)

        assert outcome.allocation.agents() == frozenset({0, 1})
        np.testing.assert_allclose(outcome.payments, [0.5, 0.5])

    def test_serves_nobody_below_cost(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that total reports below one leave everyone unserved."""
        outcome = run_mechanism(MechanismKind.PROPORTIONAL, Reports.of([0.3, 0.3]), zero_one)

        assert outcome.allocation.mask == 0
        np.testing.assert_array_equal(outcome.payments, [0.0, 0.0])

    def test_unbounded_reporter_pays_whole_cost(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that a sole unbounded reporter covers the cost and everyone is served."""
        reports = Reports.of([0.0, 0.2, 0.1], [True, False, False])

        outcome = run_mechanism(MechanismKind.PROPORTIONAL, reports, zero_one)

        assert outcome.allocation.agents() == frozenset({0, 1, 2})
        np.testing.assert_allclose(outcome.payments, [1.0, 0.0, 0.0])

    def test_rejects_multiple_goods(self) -> None:
        """Test that the single-good mechanisms refuse m > 1."""
        reports = Reports.of(np.full((2, 2), 0.5))

        with pytest.raises(KindMismatchError, match="single good"):
            run_mechanism(MechanismKind.PROPORTIONAL, reports, ItemCoverage(weights=(0.5, 0.5)))


class TestMoulin:
    """Tests for the Moulin mechanism."""

    def test_serves_largest_group_sharing_equally(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that the low reporter is dropped and the rest split the cost."""
        outcome = run_mechanism(MechanismKind.MOULIN, Reports.of([0.6, 0.6, 0.2]), zero_one)

        assert outcome.allocation.agents() == frozenset({0, 1})
        np.testing.assert_allclose(outcome.payments, [0.5, 0.5, 0.0])

    def test_harmonic_profile_serves_only_first_agent(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that reports just below 1/j leave a lone payer."""
        outcome = run_mechanism(MechanismKind.MOULIN, Reports.of([1.0, 0.5 - 1e-3, 1 / 3 - 1e-3]), zero_one)

        assert outcome.allocation.agents() == frozenset({0})
        np.testing.assert_allclose(outcome.payments, [1.0, 0.0, 0.0])

    def test_unbounded_reporter_is_served_alone(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that finite reports below the shared price stay out."""
        reports = Reports.of([0.0, 0.3, 0.3], [True, False, False])

        outcome = run_mechanism(MechanismKind.MOULIN, reports, zero_one)

        assert outcome.allocation.agents() == frozenset({0})
        np.testing.assert_allclose(outcome.payments, [1.0, 0.0, 0.0])

    def test_rejects_other_costs(self) -> None:
        """Test that Moulin needs the 0-1 cost."""
        with pytest.raises(KindMismatchError, match="0-1 single-good cost") as exc_info:
            run_mechanism(MechanismKind.MOULIN, Reports.of([0.5, 0.5]), ConcaveCardinality(steps=(0.0, 0.6, 1.0)))

        assert exc_info.value.mechanism == MechanismKind.MOULIN

    @given(reports=single_good_reports())
    @settings(deadline=None)
    def test_iterative_and_vectorized_rules_agree(self, reports: Reports) -> None:
        """Test that the elimination loop and the largest-k rule give the same outcome."""
        cost = ZeroOneSingleGood()
        iterative = run_mechanism(MechanismKind.MOULIN, reports, cost)
        vectorized = run_batch(
            MechanismKind.MOULIN,
            reports.values[None],
            reports.unbounded[None],
            np.zeros(1, dtype=np.int64),
            (cost,),
        ).outcome(0)

        assert iterative.allocation == vectorized.allocation
        np.testing.assert_allclose(iterative.payments, vectorized.payments)

    @given(reports=single_good_reports())
    @settings(deadline=None)
    def test_served_agents_pay_equal_shares(self, reports: Reports) -> None:
        """Test budget balance: every served agent pays 1/|S|."""
        outcome = run_mechanism(MechanismKind.MOULIN, reports, ZeroOneSingleGood())
        served = sorted(outcome.allocation.agents())

        if served:
            np.testing.assert_allclose(outcome.payments[served], 1 / len(served))
            assert math.fsum(outcome.payments) == pytest.approx(1.0)
        else:
            assert not outcome.payments.any()

    @given(reports=flagged_reports())
    @settings(deadline=None)
    def test_serves_largest_self_financing_group(self, reports: Reports) -> None:
        """Test the elimination loop against an exhaustive search over every group of up to eight agents."""
        values, flags = reports.values[:, 0], reports.unbounded[:, 0]
        groups = (
            members
            for size in range(reports.n + 1)
            for members in itertools.combinations(range(reports.n), size)
            if all(flags[i] or values[i] >= 1 / size for i in members)
        )
        largest = max(groups, key=len)

        outcome = run_mechanism(MechanismKind.MOULIN, reports, ZeroOneSingleGood())

        assert outcome.allocation.agents() == frozenset(largest)
        if largest:
            np.testing.assert_allclose(outcome.payments[list(largest)], 1 / len(largest))


class TestPotential:
    """Tests for the potential mechanism."""

    def test_two_unit_reports_share_cost(self, zero_one: ZeroOneSingleGood) -> None:
        """Test the VCG payments when both agents report one."""
        outcome = run_mechanism(MechanismKind.POTENTIAL, Reports.of([1.0, 1.0]), zero_one)

        assert outcome.allocation.agents() == frozenset({0, 1})
        np.testing.assert_allclose(outcome.payments, [0.5, 0.5])

    def test_externality_payments_for_unequal_reports(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that reports (0.9, 0.8) serve both agents at prices (0.7, 0.6)."""
        outcome = run_mechanism(MechanismKind.POTENTIAL, Reports.of([0.9, 0.8]), zero_one)

        assert outcome.allocation.agents() == frozenset({0, 1})
        np.testing.assert_allclose(outcome.payments, [0.7, 0.6])
        assert potential_value(zero_one, Allocation(n=2, m=1, mask=0b01)) == pytest.approx(1.0)
        assert potential_value(zero_one, Allocation(n=2, m=1, mask=0b11)) == pytest.approx(1.5)

    def test_single_agent_pays_full_cost(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that a lone agent reporting one is served at price one."""
        outcome = run_mechanism(MechanismKind.POTENTIAL, Reports.of([1.0]), zero_one)

        assert outcome.served(0)
        assert outcome.payments[0] == pytest.approx(1.0)

    def test_potential_of_full_allocation_is_harmonic(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that P_c of serving all n agents under the 0-1 cost equals H_n."""
        full = Allocation.from_agents(3, [0, 1, 2])

        assert potential_value(zero_one, full) == pytest.approx(harmonic_number(3))
        assert potential_table(zero_one, 3, 1)[full.mask] == pytest.approx(harmonic_number(3))

    def test_table_matches_direct_summation(self) -> None:
        """Test the enumerated potential against the subset formula."""
        cost = ItemCoverage(weights=(0.4, 0.7), cap=0.9)
        table = potential_table(cost, 2, 2)

        for mask in range(16):
            assert table[mask] == pytest.approx(potential_value(cost, Allocation(n=2, m=2, mask=mask)))

    def test_unbounded_agent_forces_inclusion(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that unbounded entries must be allocated."""
        reports = Reports.of([0.0, 0.1], [True, False])

        outcome = run_mechanism(MechanismKind.POTENTIAL, reports, zero_one)

        assert outcome.served(0)
        assert outcome.payments[0] <= p_max(MechanismKind.POTENTIAL, 2) + 1e-12

    def test_payment_bound_is_harmonic(self) -> None:
        """Test the per-agent payment bounds."""
        assert p_max(MechanismKind.MOULIN, 4) == 1.0
        assert p_max(MechanismKind.POTENTIAL, 4) == pytest.approx(25 / 12)

    @given(reports=single_good_reports(max_agents=4))
    @settings(deadline=None)
    def test_single_good_outcomes_respect_invariants(self, reports: Reports) -> None:
        """Test that IR, CC and the H_n bound hold on every single-good profile."""
        outcome = run_mechanism(MechanismKind.POTENTIAL, reports, ZeroOneSingleGood())
        served = [outcome.served(agent) for agent in range(reports.n)]

        assert np.all(outcome.payments <= reports.values[:, 0] + 1e-9)
        assert np.all(outcome.payments <= harmonic_number(reports.n) + 1e-9)
        if any(served):
            assert math.fsum(outcome.payments) >= 1.0 - 1e-9

    @given(reports=report_matrices(2, 2))
    @settings(deadline=None)
    def test_multi_good_payments_cover_cost(self, reports: Reports) -> None:
        """Test cost coverage under item coverage with two goods."""
        cost = ItemCoverage(weights=(0.5, 0.8), cap=1.0)

        outcome = run_mechanism(MechanismKind.POTENTIAL, reports, cost)

        assert math.fsum(outcome.payments) >= eval_cost(cost, outcome.allocation) - 1e-9

    def test_mechanism_lookup_accepts_strings(self) -> None:
        """Test looking up a mechanism by its CLI name."""
        assert mechanism_for("potential").kind is MechanismKind.POTENTIAL

    @given(cost=st.one_of(coverage_costs(2), cardinality_costs(4)))
    @settings(deadline=None)
    def test_potential_is_within_harmonic_factor_of_cost(self, cost: CostFunction) -> None:
        """Test P_c(A) <= H_n·c(A) for every allocation of two agents and two goods."""
        potential = potential_table(cost, 2, 2)

        assert np.all(potential <= harmonic_number(2) * cost_table(cost, 2, 2) + 1e-12)

    @given(reports=report_matrices(2, 2), cost=st.one_of(coverage_costs(2), cardinality_costs(4)))
    @settings(deadline=None)
    def test_payments_never_exceed_potential_of_allocation(self, reports: Reports, cost: CostFunction) -> None:
        """Test that total payments are at most P_c of the chosen allocation."""
        outcome = run_mechanism(MechanismKind.POTENTIAL, reports, cost)

        assert math.fsum(outcome.payments) <= potential_value(cost, outcome.allocation) + 1e-9

    @given(reports=report_matrices(2, 2), cost=st.one_of(coverage_costs(2), cardinality_costs(4)))
    @settings(deadline=None)
    def test_chosen_allocation_has_most_pairs_among_maximizers(self, reports: Reports, cost: CostFunction) -> None:
        """Test the choice against an exhaustive objective, preferring more pairs and then the smaller mask."""
        objectives = {}
        for mask in range(16):
            allocation = Allocation(n=2, m=2, mask=mask)
            received = math.fsum(float(reports.values[agent, good]) for agent, good in allocation.pairs())
            objectives[mask] = received - potential_value(cost, allocation)
        best = max(objectives.values())
        ties = [mask for mask, value in objectives.items() if value >= best - 1e-12 * max(1.0, abs(best))]

        outcome = run_mechanism(MechanismKind.POTENTIAL, reports, cost)

        assert outcome.allocation.mask == min(ties, key=lambda mask: (-mask.bit_count(), mask))

    def test_tie_with_empty_allocation_serves_everyone(self, zero_one: ZeroOneSingleGood) -> None:
        """Test that reports (1, 1/2) tie serving nobody, agent 0 and both, and both are served."""
        outcome = run_mechanism(MechanismKind.POTENTIAL, Reports.of([1.0, 0.5]), zero_one)

        assert outcome.allocation.agents() == frozenset({0, 1})
        np.testing.assert_allclose(outcome.payments, [1.0, 0.5])
        assert math.fsum(outcome.payments) == pytest.approx(potential_value(zero_one, outcome.allocation))

    def test_equal_size_tie_takes_smallest_mask(self) -> None:
        """Test that two single-agent maximizers resolve to the lower bitmask."""
        cost = ExplicitTable(values=(0.0, 0.4, 0.4, 1.0))

        outcome = run_mechanism(MechanismKind.POTENTIAL, Reports.of([0.45, 0.45]), cost)

        assert outcome.allocation.agents() == frozenset({0})
        assert not outcome.served(1)
