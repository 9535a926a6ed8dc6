"""Shared fixtures for domain tests."""

import pytest

from pacecore.domain.costs import ItemCoverage, ZeroOneSingleGood
from pacecore.domain.instances import (
    LowerBoundSpec,
    LowerBoundVariant,
    make_lower_bound,
    make_symmetric_boxes,
    make_uniform_single_agent,
)
from pacecore.domain.model import Atom, Box, DistributionSpec, Instance


@pytest.fixture
def zero_one() -> ZeroOneSingleGood:
    """Create the single-good 0-1 cost."""
    return ZeroOneSingleGood()


@pytest.fixture
def uniform_agent() -> Instance:
    """Create one agent with a Uniform[0, 1] value and share 1/2."""
    return make_uniform_single_agent(0.5, horizon=2_000, seed=11)


@pytest.fixture
def symmetric_pair() -> Instance:
    """Create two agents with i.i.d. uniform values and shares 1/4."""
    return make_symmetric_boxes(2, horizon=2_000, seed=5)


@pytest.fixture
def atomic_lower_bound() -> Instance:
    """Create the atomic lower-bound instance for three agents."""
    return make_lower_bound(LowerBoundSpec(n=3, eps=0.01, variant=LowerBoundVariant.ATOMIC, horizon=3_000, seed=3))


@pytest.fixture
def two_goods() -> Instance:
    """Create two agents and two goods under an item-coverage cost."""
    dist = DistributionSpec(
        n=2,
        m=2,
        components=(
            Box(probability=0.6, low=((0.0, 0.0), (0.0, 0.0)), high=((1.0, 0.5), (0.5, 1.0))),
            Atom(probability=0.4, values=((0.7, 0.2), (0.2, 0.7))),
        ),
        costs=(ItemCoverage(weights=(0.6, 0.6), cap=1.0),),
    )
    return Instance(n=2, m=2, horizon=500, shares=(0.3, 0.3), dist=dist, seed=17, name="two-goods")
