"""Tests for the ex-ante and ex-post core audits."""

import dataclasses
import math

import numpy as np
import pytest

from pacecore.domain.core_audit import (
    BlockingWitness,
    CertificateStatus,
    ThresholdPolicy,
    audit_ex_post,
    certify_ex_ante,
    coalitions,
    equilibrium_weights,
    reference_scale,
)
from pacecore.domain.costs import ItemCoverage, ZeroOneSingleGood
from pacecore.domain.equilibrium import solve_pacing
from pacecore.domain.errors import ThinnedTraceError
from pacecore.domain.instances import LowerBoundSpec, LowerBoundVariant, make_correlated_pair, make_lower_bound
from pacecore.domain.mechanisms import MechanismKind, harmonic_number
from pacecore.domain.model import Instance
from pacecore.domain.randomness import substream
from pacecore.domain.reduction import simulate
from pacecore.domain.strategies import ValueScaling, value_scaling_profile


class TestCoalitions:
    """Tests for coalition enumeration."""

    def test_small_instances_list_every_coalition_in_mask_order(self) -> None:
        """Test exhaustive enumeration for three agents."""
        listed, sampled = coalitions(3)

        assert listed == ((0,), (1,), (0, 1), (2,), (0, 2), (1, 2), (0, 1, 2))
        assert not sampled

    def test_large_instances_are_sampled(self) -> None:
        """Test that thirteen agents get singletons, the grand coalition and 256 samples."""
        listed, sampled = coalitions(13, substream(0, "coalitions"))

        assert sampled
        assert len(listed) == 13 + 1 + 256
        assert tuple(range(13)) in listed
        assert len(set(listed)) == len(listed)

    def test_weights_invert_scaling_factors(self) -> None:
        """Test 1/β weights with zero treated as 1e-9."""
        np.testing.assert_allclose(equilibrium_weights([0.5, 0.0]), [2.0, 1e9])

    def test_reference_scale(self) -> None:
        """Test n·sqrt(log T / T)."""
        assert reference_scale(2, 10_000) == pytest.approx(2 * math.sqrt(math.log(10_000) / 10_000))


class TestThresholdPolicy:
    """Tests for weighted threshold policies."""

    def test_single_good_budget_and_target(self) -> None:
        """Test the thresholds that spend at most, and at least, two rounds."""
        values = np.asarray([3.0, 2.0, 1.0])[:, None, None]
        policy = ThresholdPolicy(values, np.zeros(3, dtype=np.int64), (ZeroOneSingleGood(),), np.ones(1))

        assert policy.total_cost(policy.within(2.0)) == 2.0
        assert policy.reaching(2.0) == 2.0
        assert policy.total_cost(policy.reaching(2.0)) == 2.0
        assert policy.within(5.0) == 0.0

    def test_multi_good_threshold_respects_budget(self) -> None:
        """Test bisection of the threshold under item coverage."""
        rng = np.random.default_rng(4)
        values = rng.random((200, 2, 2))
        cost = ItemCoverage(weights=(0.6, 0.6), cap=1.0)
        policy = ThresholdPolicy(values, np.zeros(200, dtype=np.int64), (cost,), np.ones(2))

        threshold = policy.within(40.0)

        assert policy.total_cost(threshold) <= 40.0
        assert policy.total_cost(threshold) <= policy.total_cost(0.0)

    def test_witness_margins_and_frontier(self) -> None:
        """Test the blocking margins of a witness."""
        witness = BlockingWitness(
            coalition=(0, 1),
            weights=np.ones(2),
            threshold=1.0,
            cost=10.0,
            budget=10.0,
            baseline=np.asarray([0.1, 0.2]),
            alternative=np.asarray([0.3, 0.3]),
        )

        np.testing.assert_allclose(witness.margins(0.5), [0.15, 0.0])
        assert witness.delta_at(0.0) == pytest.approx(0.1)
        assert witness.gamma_at(0.0) == pytest.approx(0.5)
        np.testing.assert_allclose(witness.ratios, [3.0, 1.5])


class TestCertifyExAnte:
    """Tests for the ex-ante audit."""

    def test_paced_single_agent_is_certified(self, uniform_agent: Instance) -> None:
        """Test that a lone paced agent cannot improve on its own allocation."""
        certificate = certify_ex_ante(uniform_agent, MechanismKind.MOULIN, [0.5], 0.0, 20_000)

        assert certificate.status is CertificateStatus.CERTIFIED
        assert len(certificate.witnesses) == 1
        assert certificate.samples == 20_000

    def test_lower_bound_instance_is_refuted_below_harmonic_factor(self) -> None:
        """Test that the grand coalition blocks truthful Moulin well below H_n - 1."""
        instance = make_lower_bound(LowerBoundSpec(n=4, eps=0.01, variant=LowerBoundVariant.ATOMIC, seed=6))

        certificate = certify_ex_ante(
            instance,
            MechanismKind.MOULIN,
            [1.0] * 4,
            harmonic_number(4) - 1.0 - 0.3,
            50_000,
        )

        assert certificate.status is CertificateStatus.REFUTED
        assert certificate.blocking is not None
        assert certificate.blocking.delta_at(certificate.gamma) > 0

    def test_rejects_negative_gamma(self, uniform_agent: Instance) -> None:
        """Test the approximation factor check."""
        with pytest.raises(ValueError, match="nonnegative"):
            certify_ex_ante(uniform_agent, MechanismKind.MOULIN, [0.5], -0.1, 1_000)


class TestAuditExPost:
    """Tests for the ex-post audit."""

    def test_lower_bound_run_is_blocked(self) -> None:
        """Test that the grand coalition blocks a truthful run on the atomic lower bound."""
        instance = make_lower_bound(
            LowerBoundSpec(n=3, eps=0.01, variant=LowerBoundVariant.ATOMIC, horizon=40_000, seed=3)
        )
        result = simulate(instance, MechanismKind.MOULIN, value_scaling_profile([1.0] * 3))

        certificate = audit_ex_post(result, instance, harmonic_number(3) - 1.0 - 0.15, 0.002)

        assert certificate.status is CertificateStatus.REFUTED
        assert certificate.blocking is not None
        assert certificate.delta_star is not None
        assert certificate.delta_star > 0.002
        assert len(certificate.candidates) == 7
        assert [delta for delta, _ in certificate.frontier] == [0.0, 0.005, 0.01, 0.02, 0.05, 0.1]

    def test_paced_single_agent_is_certified(self, uniform_agent: Instance) -> None:
        """Test that a lone paced agent is not blocked beyond the reference scale."""
        instance = dataclasses.replace(uniform_agent, horizon=20_000)
        result = simulate(instance, MechanismKind.MOULIN, [ValueScaling(0.5)])

        certificate = audit_ex_post(result, instance, 0.0, beta=[0.5])

        assert certificate.status is CertificateStatus.CERTIFIED
        assert certificate.delta == pytest.approx(reference_scale(1, 20_000))
        assert certificate.blocking is None

    def test_thinned_trace_is_refused(self, uniform_agent: Instance) -> None:
        """Test that the exact audit needs every round."""
        result = simulate(uniform_agent, MechanismKind.MOULIN, [ValueScaling(0.5)], stride=5)

        with pytest.raises(ThinnedTraceError) as exc_info:
            audit_ex_post(result, uniform_agent, 0.0)

        assert exc_info.value.stride == 5


class TestEquilibriumCertification:
    """Tests for auditing a solved pacing equilibrium."""

    def test_proportional_equilibrium_is_in_the_core(self) -> None:
        """Test that the proportional equilibrium of the correlated pair passes both audits at γ = 0.

        Both agents serve exactly when V_1 + V_2 >= 0.9, which spends half a
        round's cost. The ex-post δ* is averaged over replications and must
        fall as the horizon grows.
        """
        instance = make_correlated_pair(horizon=1_000, seed=6)
        profile = solve_pacing(instance, MechanismKind.PROPORTIONAL, tol=5e-4, schedule=(16_384, 65_536))

        ex_ante = certify_ex_ante(instance, MechanismKind.PROPORTIONAL, profile, 0.0, 20_000)

        np.testing.assert_allclose(profile.beta, [0.9, 0.9], atol=0.01)
        assert ex_ante.status is CertificateStatus.CERTIFIED
        strategies = value_scaling_profile(profile.beta)
        typical: dict[int, float] = {}
        for horizon in (1_000, 16_000):
            run = dataclasses.replace(instance, horizon=horizon)
            certificates = [
                audit_ex_post(
                    simulate(run, MechanismKind.PROPORTIONAL, strategies, replication=replication),
                    run,
                    0.0,
                    beta=profile,
                )
                for replication in range(6)
            ]
            assert all(certificate.status is CertificateStatus.CERTIFIED for certificate in certificates)
            deltas = [abs(certificate.delta_star) for certificate in certificates if certificate.delta_star is not None]
            assert len(deltas) == len(certificates)
            typical[horizon] = float(np.mean(deltas))
        assert typical[16_000] < typical[1_000]
        assert typical[16_000] < 0.05
