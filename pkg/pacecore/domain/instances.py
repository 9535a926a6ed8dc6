"""Canonical instances: harmonic lower-bound families, DWL witnesses and small smoke tests."""

import logging
from dataclasses import dataclass
from enum import StrEnum, auto

import numpy as np
import numpy.typing as npt

from pacecore.domain.costs import ZeroOneSingleGood
from pacecore.domain.errors import ConfigurationError
from pacecore.domain.mechanisms import MechanismKind, Reports, run_mechanism
from pacecore.domain.model import Atom, Box, Component, DistributionSpec, Instance, PermutedAtom
from pacecore.domain.welfare import harmonic_profile

__all__ = [
    "ATOMIC_PERTURBATION",
    "LowerBoundSpec",
    "LowerBoundVariant",
    "make_correlated_pair",
    "make_harmonic_dwl_witness",
    "make_lower_bound",
    "make_symmetric_boxes",
    "make_uniform_single_agent",
    "smoothed_share",
]

logger = logging.getLogger(__name__)

ATOMIC_PERTURBATION = 1e-6
DEFAULT_HORIZON = 10_000


class LowerBoundVariant(StrEnum):
    """Flavours of the lower-bound family.

    ATOMIC uses point masses smoothed only by a 1e-6 perturbation, shares 1/(2n)
    and truthful scaling. SMOOTHED is absolutely continuous, scales by 1-ε and
    sets the shares to the resulting spend.
    """

    ATOMIC = auto()
    SMOOTHED = auto()


@dataclass(frozen=True, kw_only=True)
class LowerBoundSpec:
    """Parameters of a lower-bound instance.

    ``alpha_prime`` is the probability of the shared round in the smoothed
    variant; the atomic variant always uses 1/2.
    """

    n: int
    eps: float
    alpha_prime: float = 0.45
    variant: LowerBoundVariant = LowerBoundVariant.ATOMIC
    horizon: int = DEFAULT_HORIZON
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the construction parameters."""
        if self.n < 1:
            msg = f"Lower-bound instances need at least one agent, got {self.n}"
            raise ConfigurationError(msg)
        if not 0 < self.eps < 1 / self.n:
            msg = f"ε must lie in (0, 1/n) = (0, {1 / self.n:.4g}), got {self.eps}"
            raise ConfigurationError(msg)
        if self.variant is LowerBoundVariant.ATOMIC and self.eps <= ATOMIC_PERTURBATION:
            msg = f"ε must exceed the atom smoothing {ATOMIC_PERTURBATION}, got {self.eps}"
            raise ConfigurationError(msg)
        if not 0 < self.alpha_prime < 1 / 2:
            msg = f"Shared-round probability must lie in (0, 1/2), got {self.alpha_prime}"
            raise ConfigurationError(msg)


def _unit(n: int, agent: int, on: float, off: float) -> tuple[tuple[float, ...], ...]:
    return tuple(((on if j == agent else off),) for j in range(n))


def _atomic(spec: LowerBoundSpec) -> Instance:
    n, eps = spec.n, spec.eps
    share = 1 / (2 * n)
    shared = PermutedAtom(probability=1 / 2, base=tuple(1 / j - eps for j in range(1, n + 1)))
    selfish = [Atom(probability=share, values=_unit(n, i, 1.0, 0.0)) for i in range(n)]
    dist = DistributionSpec(
        n=n,
        m=1,
        components=(shared, *selfish),
        costs=(ZeroOneSingleGood(),),
        perturbation_eps=ATOMIC_PERTURBATION,
    )
    return Instance(
        n=n,
        m=1,
        horizon=spec.horizon,
        shares=(share,) * n,
        dist=dist,
        seed=spec.seed,
        name=f"lower-bound-atomic-n{n}",
    )


def _blocking_profile(n: int, eps: float) -> npt.NDArray[np.float64]:
    """Reports just below which Moulin serves nobody: payments of served agents, reports of the rest."""
    witness = make_harmonic_dwl_witness(n, eps / (2 * n * n))
    outcome = run_mechanism(MechanismKind.MOULIN, witness, ZeroOneSingleGood())
    served = np.asarray([outcome.served(i) for i in range(n)])
    return np.where(served, outcome.payments, witness.values[:, 0])


def smoothed_share(n: int, eps: float, alpha_prime: float) -> float:
    """Per-agent share of the smoothed variant: the Moulin spend α′/(n(1-nε)) at scaling 1-ε."""
    return alpha_prime / (n * (1 - n * eps))


def _smoothed(spec: LowerBoundSpec) -> Instance:
    n, eps, alpha_prime = spec.n, spec.eps, spec.alpha_prime
    share = smoothed_share(n, eps, alpha_prime)
    remainder = 1 - alpha_prime - n * share
    if remainder < 0 or n * share > 1:
        msg = f"ε={eps} is too large for n={n} and α′={alpha_prime}: probabilities exceed 1"
        raise ConfigurationError(msg)
    scale = 1 - eps
    noise = eps * scale
    threshold = _blocking_profile(n, eps)
    components: list[Component] = [
        PermutedAtom(
            probability=alpha_prime,
            base=tuple(float(scale * (v - eps)) for v in threshold),
            jitter=noise,
        )
    ]
    components.extend(
        Box(probability=share, low=_unit(n, i, scale, 0.0), high=_unit(n, i, 1.0, noise)) for i in range(n)
    )
    if remainder > 0:
        components.append(Box(probability=remainder, low=((0.0,),) * n, high=((noise,),) * n))
    dist = DistributionSpec(
        n=n,
        m=1,
        components=tuple(components),
        costs=(ZeroOneSingleGood(),),
        perturbation_eps=0.0,
    )
    return Instance(
        n=n,
        m=1,
        horizon=spec.horizon,
        shares=(share,) * n,
        dist=dist,
        seed=spec.seed,
        name=f"lower-bound-smoothed-n{n}",
    )


def make_lower_bound(spec: LowerBoundSpec) -> Instance:
    """Build the harmonic lower-bound instance for Moulin.

    Each agent has a selfish round where only it values the good, and a shared
    round deals the values 1/j - ε to the agents in random order. Under the
    intended scaling Moulin never serves a shared round, yet the grand
    coalition spending the same budget on shared rounds gains a factor close
    to H_n - nε.

    Raises:
        ConfigurationError: If ε or the shared-round probability is infeasible.
    """
    instance = _smoothed(spec) if spec.variant is LowerBoundVariant.SMOOTHED else _atomic(spec)
    logger.info("Built %s with shares %s", instance.name, instance.shares)
    return instance


def make_harmonic_dwl_witness(n: int, eps: float) -> Reports:
    """Reports (1, 1/2 - ε, ..., 1/n - ε) on which Moulin serves only the first agent.

    Its dead-weight loss is H_n - 1 - (n-1)ε.

    Raises:
        ValueError: If ε is not in (0, 1/(2n²)).
    """
    if n < 1 or not 0 < eps < 1 / (2 * n * n):
        msg = f"Witness needs n >= 1 and ε in (0, 1/(2n²)), got n={n}, ε={eps}"
        raise ValueError(msg)
    return Reports.of(harmonic_profile(n, eps)[:, None])


def make_uniform_single_agent(alpha: float = 0.5, *, horizon: int = DEFAULT_HORIZON, seed: int = 0) -> Instance:
    """One agent with a Uniform[0, 1] value for one good; Moulin spends 1 - β at scaling β."""
    dist = DistributionSpec(
        n=1,
        m=1,
        components=(Box(probability=1.0, low=((0.0,),), high=((1.0,),)),),
        costs=(ZeroOneSingleGood(),),
    )
    return Instance(n=1, m=1, horizon=horizon, shares=(alpha,), dist=dist, seed=seed, name="uniform-single-agent")


def make_symmetric_boxes(
    n: int = 2,
    share: float | None = None,
    *,
    horizon: int = DEFAULT_HORIZON,
    seed: int = 0,
) -> Instance:
    """n agents with i.i.d. Uniform[0, 1] values and equal shares, 1/(2n) by default."""
    share = 1 / (2 * n) if share is None else share
    dist = DistributionSpec(
        n=n,
        m=1,
        components=(Box(probability=1.0, low=((0.0,),) * n, high=((1.0,),) * n),),
        costs=(ZeroOneSingleGood(),),
    )
    return Instance(
        n=n,
        m=1,
        horizon=horizon,
        shares=(share,) * n,
        dist=dist,
        seed=seed,
        name=f"symmetric-boxes-n{n}",
    )


def make_correlated_pair(*, horizon: int = DEFAULT_HORIZON, seed: int = 0) -> Instance:
    """Two agents whose values move together: both high, one high, or both low."""
    components = (
        Box(probability=0.3, low=((0.5,), (0.5,)), high=((1.0,), (1.0,))),
        Box(probability=0.2, low=((0.5,), (0.0,)), high=((1.0,), (0.3,))),
        Box(probability=0.2, low=((0.0,), (0.5,)), high=((0.3,), (1.0,))),
        Box(probability=0.3, low=((0.0,), (0.0,)), high=((0.4,), (0.4,))),
    )
    dist = DistributionSpec(n=2, m=1, components=components, costs=(ZeroOneSingleGood(),))
    return Instance(n=2, m=1, horizon=horizon, shares=(0.25, 0.25), dist=dist, seed=seed, name="correlated-pair")
